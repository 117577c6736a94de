use std::collections::BTreeMap;
use std::f64::consts::PI;

use gradmech::brackets::Bracket;
use gradmech::constraints::*;
use gradmech::dynamics::*;
use gradmech::random;
use gradmech::superalgebra::{GrassmannNumber, Parity};
use gradmech::symalg::*;
use proptest::prelude::*;
use rand::Rng;

fn p(t: &VariableTable, s: &str) -> GradedExpr {
    parse_expr(s, t).unwrap()
}

fn hamiltonian(vars: &[&str], h: &str, primary: &[&str]) -> (HamiltonianModel, ConstraintReport) {
    let mut t = VariableTable::new(0);
    for q in vars {
        t.add_canonical_pair(q, Parity::Even).unwrap();
    }
    let h = p(&t, h);
    let prim = primary.iter().map(|s| p(&t, s)).collect();
    let hm = HamiltonianModel::new(t, h, prim).unwrap();
    let rep = run_dirac_bergmann(&hm).unwrap();
    (hm, rep)
}

fn x0(t: &VariableTable, vals: &[(&str, f64)]) -> BTreeMap<VarId, NumGrassmann> {
    vals.iter()
        .map(|(n, v)| (t.require(n).unwrap(), NumGrassmann::real(t.generators(), *v)))
        .collect()
}

fn harmonic() -> ConstraintReport {
    hamiltonian(&["q"], "1/2*p_q^2 + 1/2*q^2", &[]).1
}

fn para4() -> ConstraintReport {
    let mut t = VariableTable::new(0);
    for q in ["q1", "q2", "q3", "q4"] {
        t.add_canonical_pair(q, Parity::Even).unwrap();
    }
    let l = p(&t, "1/2*q1_dot^2 + 1/2*q2_dot^2 - 1/2*q2^2 - 1/2*q4^2");
    let pa = primary_constraints(&LagrangianModel::new(t, l).unwrap()).unwrap();
    run_dirac_bergmann(&pa.model).unwrap()
}

fn harmonic_error(traj: &Trajectory) -> f64 {
    traj.states
        .iter()
        .map(|s| (s.x[0] - s.t.cos()).abs().max((s.x[1] + s.t.sin()).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn harmonic_rk4() {
    let rep = harmonic();
    let t = &rep.table;
    let traj = evolve(&rep, &x0(t, &[("q", 1.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(1e-3, 10_000)).unwrap();
    assert!((traj.last().t - 10.0).abs() < 1e-9);
    assert!(harmonic_error(&traj) <= 1e-6);
    assert!(symplectic_check(&traj) <= 1e-8);
    assert!(conservation_report(&traj, &[rep.total_hamiltonian.clone()]).unwrap()[0] <= 1e-8);
    // t = π/2
    let n = 1571;
    let traj = evolve(&rep, &x0(t, &[("q", 1.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(PI / 2.0 / n as f64, n)).unwrap();
    let end = traj.last();
    assert!(end.x[0].abs() < 1e-6 && (end.x[1] + 1.0).abs() < 1e-6);
    // unconstrained: nothing to drift
    assert!(constraint_drift(&traj, &rep).unwrap().is_empty());
}

#[test]
fn harmonic_exact_linear() {
    let rep = harmonic();
    let t = &rep.table;
    let traj = evolve(&rep, &x0(t, &[("q", 1.0)]), &MultiplierSchedule::new(), &EvolveConfig::exact_linear(0.01, 1000)).unwrap();
    assert!(symplectic_check(&traj) <= 1e-12);
    assert!(harmonic_error(&traj) <= 1e-11);
    let end = traj.last();
    let rot = nalgebra::DMatrix::from_row_slice(2, 2, &[end.t.cos(), end.t.sin(), -end.t.sin(), end.t.cos()]);
    assert!((&end.monodromy - rot).amax() <= 1e-11);
}

#[test]
fn richardson_exponent() {
    let rep = harmonic();
    let t = &rep.table;
    let err = |dt: f64| {
        let n = (10.0 / dt).round() as usize;
        let traj = evolve(&rep, &x0(t, &[("q", 1.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(dt, n)).unwrap();
        let e = traj.last();
        (e.x[0] - e.t.cos()).abs().max((e.x[1] + e.t.sin()).abs())
    };
    let k = (err(0.1) / err(0.05)).log2();
    assert!((3.7..=4.3).contains(&k), "{k}");
}

#[test]
fn free_particle_and_zero_hamiltonian() {
    let (_, rep) = hamiltonian(&["q"], "1/2*p_q^2", &[]);
    let t = &rep.table;
    for dt in [0.37, 2.0, 1e-3] {
        let traj = evolve(&rep, &x0(t, &[("q", 0.25), ("p_q", -1.5)]), &MultiplierSchedule::new(), &EvolveConfig::exact_linear(dt, 7)).unwrap();
        for s in &traj.states {
            assert!((s.x[0] - (0.25 - 1.5 * s.t)).abs() <= 1e-12 * (1.0 + s.t));
            assert_eq!(s.x[1], -1.5);
        }
    }
    // Q = q t is not conserved
    let traj = evolve(&rep, &x0(t, &[("q", 1.0), ("p_q", 1.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(0.1, 10)).unwrap();
    let d = conservation_report(&traj, &[p(t, "q*t"), p(t, "q - t*p_q")]).unwrap();
    assert!(d[0] > 0.5 && d[1] <= 1e-12);

    let (_, zero) = hamiltonian(&["q"], "0", &[]);
    let traj = evolve(&zero, &x0(&zero.table, &[("q", 2.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(0.1, 20)).unwrap();
    assert_eq!(symplectic_check(&traj), 0.0);
    assert_eq!(traj.last().x[0], 2.0);
}

#[test]
fn para4_surface_is_preserved() {
    let rep = para4();
    let t = &rep.table;
    let u3 = t.require("u3").unwrap();
    let sched = MultiplierSchedule::new().with(
        u3,
        PiecewisePolynomial::new(vec![2.0, 5.0], vec![vec![0.5, 1.0], vec![4.5, -1.0], vec![-0.5]]).unwrap(),
    );
    let start = x0(t, &[("q1", 1.0), ("p1", 0.5), ("q2", 0.3), ("p2", -0.2), ("q3", 0.7)]);
    let traj = evolve(&rep, &start, &sched, &EvolveConfig::rk4(1e-3, 10_000)).unwrap();
    let drift = constraint_drift(&traj, &rep).unwrap();
    assert_eq!(drift.len(), 3);
    assert!(drift.iter().all(|d| *d <= 1e-8), "{drift:?}");
    assert!(symplectic_check(&traj) <= 1e-8);
    let charges = conservation_report(&traj, &[rep.total_hamiltonian.clone(), p(t, "p3"), p(t, "p1")]).unwrap();
    assert!(charges.iter().all(|d| *d <= 1e-8), "{charges:?}");
    // q3 follows the schedule: q3(t) = 0.7 + ∫u3
    let q3 = traj.series(t.require("q3").unwrap()).unwrap();
    let exact = 0.7 + 0.5 * 2.0 + 2.0 + (4.5 * 3.0 - (25.0 - 4.0) / 2.0) - 0.5 * 5.0;
    assert!((q3.last().unwrap() - exact).abs() <= 1e-9);

    // off the surface the secondary constraint is violated from the start
    let off = x0(t, &[("q1", 1.0), ("q4", 1.0)]);
    let traj = evolve(&rep, &off, &sched, &EvolveConfig::rk4(1e-2, 100)).unwrap();
    let drift = constraint_drift(&traj, &rep).unwrap();
    let idx = rep.chain.iter().position(|(c, _)| *c == p(t, "q4")).unwrap();
    let idx_p4 = rep.chain.iter().position(|(c, _)| *c == p(t, "p4")).unwrap();
    assert!(drift[idx] >= 1.0 - 1e-12);
    assert!((drift[idx_p4] - 1.0).abs() < 1e-9); // p4(t) = −t
}

#[test]
fn gauge_difference_para4() {
    let rep = para4();
    let t = &rep.table;
    let u3 = t.require("u3").unwrap();
    let start = x0(t, &[("q1", 1.0), ("p1", 0.5), ("q2", 0.3), ("q3", 0.7)]);
    let s0 = MultiplierSchedule::new();
    let s1 = MultiplierSchedule::new().with(u3, PiecewisePolynomial::constant(1.0));
    let g = gauge_difference(&rep, &start, &s0, &s1, &p(t, "q3"), 1e-3).unwrap();
    assert!((g.predicted - 1e-3).abs() < 1e-15);
    assert!(g.discrepancy() <= 1e-6);
    let g = gauge_difference(&rep, &start, &s0, &s1, &p(t, "q1"), 1e-3).unwrap();
    assert!(g.measured.abs() <= 1e-6 && g.predicted == 0.0);
    let g = gauge_difference(&rep, &start, &s1, &s1, &p(t, "q3*q1"), 1e-3).unwrap();
    assert_eq!(g.measured, 0.0);

    // time-dependent difference: the remainder is second order
    let s2 = MultiplierSchedule::new().with(u3, PiecewisePolynomial::polynomial(vec![1.0, 1.0, 1.0]));
    let f = p(t, "q3");
    let d1 = gauge_difference(&rep, &start, &s0, &s2, &f, 1e-3).unwrap().discrepancy();
    let d2 = gauge_difference(&rep, &start, &s0, &s2, &f, 5e-4).unwrap().discrepancy();
    assert!(d1 <= 1e-6 && d1 / d2 >= 4.0, "{d1} {d2}");
}

#[test]
fn scheme_and_schedule_errors() {
    let mut t = VariableTable::new(0);
    t.add_canonical_pair("x", Parity::Even).unwrap();
    t.add_canonical_pair("y", Parity::Even).unwrap();
    let hm = HamiltonianModel::new(t.clone(), p(&t, "1/2*exp(-y)*p_x^2"), vec![p(&t, "p_y")]).unwrap();
    let rep = verify_constraint_set(&hm, &[p(&t, "p_x")], None).unwrap().report;
    let t = &rep.table;
    let e = evolve(&rep, &x0(t, &[]), &MultiplierSchedule::new(), &EvolveConfig::exact_linear(0.1, 1)).unwrap_err();
    assert!(matches!(e, DynamicsError::SchemeMismatch(_)));
    assert!(matches!(
        PiecewisePolynomial::new(vec![1.0], vec![vec![0.0], vec![1.0]]),
        Err(DynamicsError::Discontinuous { .. })
    ));
    let bad = MultiplierSchedule::new().with(t.require("x").unwrap(), PiecewisePolynomial::constant(1.0));
    assert!(matches!(
        evolve(&rep, &x0(t, &[]), &bad, &EvolveConfig::rk4(0.1, 1)),
        Err(DynamicsError::BadSchedule(_))
    ));
    // blow-up is reported
    let (_, rep) = hamiltonian(&["q"], "1/2*p_q^2 - 1/4*q^4", &[]);
    let e = evolve(&rep, &x0(&rep.table, &[("q", 10.0)]), &MultiplierSchedule::new(), &EvolveConfig::rk4(0.5, 50)).unwrap_err();
    assert!(matches!(e, DynamicsError::NonFinite(_)));
}

/// `L = ½ẋ² − ½x² + ½ψ̇₁ψ₁ + ½ψ̇₂ψ₂ + ψ₁ψ₂`
fn fermion_pair() -> ConstraintReport {
    let mut t = VariableTable::new(2);
    t.add_canonical_pair("x", Parity::Even).unwrap();
    t.add_canonical_pair("psi1", Parity::Odd).unwrap();
    t.add_canonical_pair("psi2", Parity::Odd).unwrap();
    let l = p(&t, "1/2*x_dot^2 - 1/2*x^2 + 1/2*psi1_dot*psi1 + 1/2*psi2_dot*psi2 + psi1*psi2");
    let pa = primary_constraints(&LagrangianModel::new(t, l).unwrap()).unwrap();
    run_dirac_bergmann(&pa.model).unwrap()
}

#[test]
fn fermion_pair_dirac_matches_poisson() {
    let rep = fermion_pair();
    let t = &rep.table;
    let g = t.generators();
    let z = |i: usize| GrassmannNumber::generator(g, i).unwrap();
    let half = |x: GrassmannNumber| x.scale(&gradmech::superalgebra::rat(1, 2));
    let mut start = x0(t, &[("x", 1.0), ("p_x", 0.0)]);
    for (name, val) in [("psi1", z(1)), ("p_psi1", half(z(1))), ("psi2", z(2)), ("p_psi2", half(z(2)))] {
        start.insert(t.require(name).unwrap(), NumGrassmann::from_exact(&val, g));
    }
    let cfg = EvolveConfig::rk4(1e-3, 3000);
    let a = evolve(&rep, &start, &MultiplierSchedule::new(), &cfg).unwrap();
    let b = evolve(&rep, &start, &MultiplierSchedule::new(), &EvolveConfig { bracket: BracketMode::Dirac, ..cfg }).unwrap();
    for (sa, sb) in a.states.iter().zip(&b.states) {
        assert!((&sa.x - &sb.x).amax() <= 1e-12);
        for (u, v) in sa.grassmann.iter().zip(&sb.grassmann) {
            let mut d = u.clone();
            d.add_scaled(v, -1.0);
            assert!(d.norm() <= 1e-9);
        }
    }
    assert!(constraint_drift(&a, &rep).unwrap().iter().all(|d| *d <= 1e-8));
    // the mass term rotates ψ₁ into ψ₂: the ζ₁ component of ψ₂ is nonzero
    let psi2 = a.flow.layout.vars.iter().position(|v| *v == t.require("psi2").unwrap()).unwrap();
    assert!(a.last().grassmann[psi2].0[1].abs() > 0.1);
    let energy = conservation_report(&a, &[rep.total_hamiltonian.clone()]).unwrap();
    assert!(energy[0] <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Random positive quadratic Hamiltonians: exact flows are symplectic and rk4 tracks them.
    #[test]
    fn quadratic_flows_are_symplectic(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let mut t = VariableTable::new(0);
        let n = rng.random_range(1..=2);
        for i in 0..n {
            t.add_canonical_pair(&format!("q{}", i + 1), Parity::Even).unwrap();
        }
        let xs: Vec<VarId> = t.canonical_pairs().iter().flat_map(|(q, p)| [*q, *p]).collect();
        let mut h = GradedExpr::zero(0);
        for (i, a) in xs.iter().enumerate() {
            for b in &xs[i..] {
                let c = rng.random_range(-3..=3);
                h = &h + &(&GradedExpr::var(&t, *a) * &GradedExpr::var(&t, *b)).scale(&gradmech::superalgebra::rat(c, 4));
            }
        }
        let flow = Flow::new(&t, &h, Bracket::Poisson).unwrap();
        let start: BTreeMap<VarId, NumGrassmann> = xs.iter().map(|v| (*v, NumGrassmann::real(0, rng.random_range(-1.0..1.0)))).collect();
        let sched = MultiplierSchedule::new();
        let exact = evolve_flow(&flow, &start, &sched, &EvolveConfig::exact_linear(0.01, 100)).unwrap();
        prop_assert!(symplectic_check(&exact) <= 1e-10);
        let rk = evolve_flow(&flow, &start, &sched, &EvolveConfig::rk4(0.01, 100)).unwrap();
        let scale = exact.last().x.amax().max(exact.last().monodromy.amax()).max(1.0);
        prop_assert!((&exact.last().x - &rk.last().x).amax() <= 1e-7 * scale);
        prop_assert!((&exact.last().monodromy - &rk.last().monodromy).amax() <= 1e-7 * scale);
    }
}
