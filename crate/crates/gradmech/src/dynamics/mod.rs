//! Numerical evolution under total or extended Hamiltonians.
//!
//! The state holds every phase variable as a floating-point Grassmann number, so odd
//! variables are carried as coefficient vectors over the generator basis. The tangent
//! map (monodromy) is tracked for the body of the even sector only.

mod numeric;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::brackets::{Bracket, BracketError};
use crate::constraints::ConstraintReport;
use crate::superalgebra::Parity;
use crate::symalg::{GradedExpr, SymError, VarId, VarKind, VariableTable};

pub use numeric::{base_values, Compiled, NumGrassmann};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("scheme mismatch: {0}")]
    SchemeMismatch(String),
    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),
    #[error("cannot evaluate numerically: {0}")]
    Unevaluable(String),
    #[error("schedule is discontinuous at t = {at}: {left} vs {right}")]
    Discontinuous { at: f64, left: f64, right: f64 },
    #[error("invalid schedule: {0}")]
    BadSchedule(String),
    #[error("invalid initial state: {0}")]
    BadState(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error(transparent)]
    Bracket(#[from] BracketError),
}

/// Piecewise polynomial in absolute time; `polys[i]` holds ascending coefficients and is
/// active on `[breaks[i-1], breaks[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePolynomial {
    breaks: Vec<f64>,
    polys: Vec<Vec<f64>>,
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

impl PiecewisePolynomial {
    pub fn new(breaks: Vec<f64>, polys: Vec<Vec<f64>>) -> Result<Self, DynamicsError> {
        if polys.len() != breaks.len() + 1 {
            return Err(DynamicsError::BadSchedule(format!(
                "{} pieces for {} breakpoints",
                polys.len(),
                breaks.len()
            )));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|b| !b.is_finite()) {
            return Err(DynamicsError::BadSchedule("breakpoints must be finite and increasing".into()));
        }
        for (i, &b) in breaks.iter().enumerate() {
            let (l, r) = (horner(&polys[i], b), horner(&polys[i + 1], b));
            if (l - r).abs() > 1e-9 * l.abs().max(r.abs()).max(1.0) {
                return Err(DynamicsError::Discontinuous { at: b, left: l, right: r });
            }
        }
        Ok(PiecewisePolynomial { breaks, polys })
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        PiecewisePolynomial { breaks: Vec::new(), polys: vec![coeffs] }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(vec![c])
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.breaks.partition_point(|b| *b <= t);
        horner(&self.polys[i], t)
    }

    pub fn is_constant(&self) -> bool {
        self.polys.len() == 1 && self.polys[0].iter().skip(1).all(|c| *c == 0.0)
    }
}

/// Values of the free multipliers `v^i(t)`; unscheduled multipliers are zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiplierSchedule(pub BTreeMap<VarId, PiecewisePolynomial>);

impl MultiplierSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: VarId, p: PiecewisePolynomial) -> Self {
        self.0.insert(v, p);
        self
    }

    pub fn value(&self, v: VarId, t: f64) -> f64 {
        self.0.get(&v).map_or(0.0, |p| p.eval(t))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    ExactLinear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Total,
    Extended,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BracketMode {
    Poisson,
    Dirac,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub steps: usize,
    pub scheme: Scheme,
    pub generator: Generator,
    pub bracket: BracketMode,
}

impl EvolveConfig {
    pub fn rk4(dt: f64, steps: usize) -> Self {
        EvolveConfig { dt, steps, scheme: Scheme::Rk4, generator: Generator::Total, bracket: BracketMode::Poisson }
    }

    pub fn exact_linear(dt: f64, steps: usize) -> Self {
        EvolveConfig { scheme: Scheme::ExactLinear, ..Self::rk4(dt, steps) }
    }
}

/// Phase variables in state order (all positions, then all momenta) and the even sector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseLayout {
    pub vars: Vec<VarId>,
    /// Indices into `vars`: even positions, then their momenta in the same order.
    pub even: Vec<usize>,
}

impl PhaseLayout {
    pub fn new(table: &VariableTable) -> Self {
        let pairs = table.canonical_pairs();
        let n = pairs.len();
        let vars: Vec<VarId> = pairs.iter().map(|(q, _)| *q).chain(pairs.iter().map(|(_, p)| *p)).collect();
        let even_q: Vec<usize> = (0..n).filter(|&i| table.parity(pairs[i].0) == Parity::Even).collect();
        let even = even_q.iter().copied().chain(even_q.iter().map(|i| i + n)).collect();
        PhaseLayout { vars, even }
    }

    /// `J = [[0, 1], [−1, 0]]` on the even sector.
    pub fn symplectic_unit(&self) -> DMatrix<f64> {
        let m = self.even.len() / 2;
        let mut j = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            j[(i, m + i)] = 1.0;
            j[(m + i, i)] = -1.0;
        }
        j
    }
}

#[derive(Clone, Debug)]
pub struct TrajectoryState {
    pub t: f64,
    /// Bodies of the even sector, in `PhaseLayout::even` order.
    pub x: DVector<f64>,
    /// Every phase variable, in `PhaseLayout::vars` order.
    pub grassmann: Vec<NumGrassmann>,
    pub monodromy: DMatrix<f64>,
}

/// Vector field `ẋ^M = [x^M, H}` compiled for evaluation.
#[derive(Clone, Debug)]
pub struct Flow {
    pub table: VariableTable,
    pub hamiltonian: GradedExpr,
    pub layout: PhaseLayout,
    pub rhs: Vec<GradedExpr>,
    compiled: Vec<Compiled>,
    jacobian: Vec<Vec<Compiled>>,
    /// Multiplier symbols the Hamiltonian depends on.
    pub multipliers: Vec<VarId>,
}

impl Flow {
    pub fn new(table: &VariableTable, hamiltonian: &GradedExpr, bracket: Bracket<'_>) -> Result<Self, DynamicsError> {
        let layout = PhaseLayout::new(table);
        let mut rhs = Vec::with_capacity(layout.vars.len());
        for v in &layout.vars {
            rhs.push(bracket.apply(&GradedExpr::var(table, *v), hamiltonian, table)?);
        }
        let compiled = rhs.iter().map(|e| Compiled::new(e, table)).collect::<Result<Vec<_>, _>>()?;
        let jacobian = layout
            .even
            .iter()
            .map(|&m| {
                layout
                    .even
                    .iter()
                    .map(|&n| Compiled::new(&rhs[m].d(table, layout.vars[n]), table))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let multipliers = hamiltonian.vars().into_iter().filter(|v| table.kind(*v) == VarKind::Auxiliary).collect();
        Ok(Flow { table: table.clone(), hamiltonian: hamiltonian.clone(), layout, rhs, compiled, jacobian, multipliers })
    }

    fn values(&self, t: f64, x: &[NumGrassmann], schedule: &MultiplierSchedule) -> Vec<NumGrassmann> {
        let g = self.table.generators();
        let mut vals = base_values(&self.table);
        vals[self.table.time().index()] = NumGrassmann::real(g, t);
        for v in schedule.0.keys() {
            vals[v.index()] = NumGrassmann::real(g, schedule.value(*v, t));
        }
        for (v, val) in self.layout.vars.iter().zip(x) {
            vals[v.index()] = val.clone();
        }
        vals
    }

    fn field(&self, vals: &[NumGrassmann]) -> Vec<NumGrassmann> {
        self.compiled.iter().map(|c| c.eval(vals)).collect()
    }

    fn tangent(&self, vals: &[NumGrassmann]) -> DMatrix<f64> {
        let n = self.layout.even.len();
        DMatrix::from_fn(n, n, |i, j| self.jacobian[i][j].eval_body(vals))
    }

    fn initial_state(&self, x0: &BTreeMap<VarId, NumGrassmann>) -> Result<Vec<NumGrassmann>, DynamicsError> {
        let g = self.table.generators();
        let mut x = vec![NumGrassmann::zero(g); self.layout.vars.len()];
        for (v, val) in x0 {
            let i = self.layout.vars.iter().position(|w| w == v).ok_or_else(|| {
                DynamicsError::BadState(format!("{} is not a phase-space variable", self.table.name(*v)))
            })?;
            if val.0.len() != 1usize << g {
                return Err(DynamicsError::BadState(format!("{} has the wrong number of components", self.table.name(*v))));
            }
            let parity = self.table.parity(*v);
            let bad = val
                .0
                .iter()
                .enumerate()
                .any(|(m, c)| *c != 0.0 && Parity::from_count(m.count_ones() as usize) != parity);
            if bad || !val.is_finite() {
                return Err(DynamicsError::BadState(format!(
                    "value of {} is not a finite {} element",
                    self.table.name(*v),
                    if parity.is_odd() { "odd" } else { "even" }
                )));
            }
            x[i] = val.clone();
        }
        Ok(x)
    }

    fn check_schedule(&self, schedule: &MultiplierSchedule) -> Result<(), DynamicsError> {
        for v in schedule.0.keys() {
            if self.table.kind(*v) != VarKind::Auxiliary {
                return Err(DynamicsError::BadSchedule(format!("{} is not a multiplier", self.table.name(*v))));
            }
        }
        Ok(())
    }

    fn state(&self, t: f64, x: Vec<NumGrassmann>, s: DMatrix<f64>) -> Result<TrajectoryState, DynamicsError> {
        if !x.iter().all(NumGrassmann::is_finite) || !s.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite(t));
        }
        let body = DVector::from_iterator(self.layout.even.len(), self.layout.even.iter().map(|&i| x[i].body()));
        Ok(TrajectoryState { t, x: body, grassmann: x, monodromy: s })
    }

    fn rk4_step(
        &self,
        t: f64,
        x: &[NumGrassmann],
        s: &DMatrix<f64>,
        dt: f64,
        schedule: &MultiplierSchedule,
    ) -> (Vec<NumGrassmann>, DMatrix<f64>) {
        let shift = |x: &[NumGrassmann], k: &[NumGrassmann], h: f64| -> Vec<NumGrassmann> {
            x.iter()
                .zip(k)
                .map(|(a, b)| {
                    let mut a = a.clone();
                    a.add_scaled(b, h);
                    a
                })
                .collect()
        };
        let eval = |t: f64, x: &[NumGrassmann], s: &DMatrix<f64>| {
            let vals = self.values(t, x, schedule);
            (self.field(&vals), self.tangent(&vals) * s)
        };
        let (k1, m1) = eval(t, x, s);
        let (k2, m2) = eval(t + dt / 2.0, &shift(x, &k1, dt / 2.0), &(s + &m1 * (dt / 2.0)));
        let (k3, m3) = eval(t + dt / 2.0, &shift(x, &k2, dt / 2.0), &(s + &m2 * (dt / 2.0)));
        let (k4, m4) = eval(t + dt, &shift(x, &k3, dt), &(s + &m3 * dt));
        let mut out = x.to_vec();
        for (i, o) in out.iter_mut().enumerate() {
            o.add_scaled(&k1[i], dt / 6.0);
            o.add_scaled(&k2[i], dt / 3.0);
            o.add_scaled(&k3[i], dt / 3.0);
            o.add_scaled(&k4[i], dt / 6.0);
        }
        let s_new = s + (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (dt / 6.0);
        (out, s_new)
    }

    /// `ẋ = A x + b` with constant `A` (real) and `b`; fails if the field is not of that form.
    fn affine_parts(&self, schedule: &MultiplierSchedule) -> Result<(DMatrix<f64>, Vec<NumGrassmann>), DynamicsError> {
        let t = &self.table;
        let phase: BTreeSet<VarId> = self.layout.vars.iter().copied().collect();
        for (v, e) in self.layout.vars.iter().zip(&self.rhs) {
            let affine = e.degree_in(&phase).is_some_and(|d| d <= 1)
                && !e.terms().any(|((_, form), _)| form.0.iter().any(|(w, _)| phase.contains(w)));
            if !affine {
                return Err(DynamicsError::SchemeMismatch(format!(
                    "d{}/dt = {} is not linear in the phase variables",
                    t.name(*v),
                    e.render(t)
                )));
            }
            if e.contains_var(t.time()) {
                return Err(DynamicsError::SchemeMismatch(format!("d{}/dt depends explicitly on t", t.name(*v))));
            }
            if let Some(u) = e.vars().into_iter().find(|u| {
                t.kind(*u) == VarKind::Auxiliary && schedule.0.get(u).is_some_and(|p| !p.is_constant())
            }) {
                return Err(DynamicsError::SchemeMismatch(format!("multiplier {} is not constant", t.name(u))));
            }
        }
        let n = self.layout.vars.len();
        let g = t.generators();
        let zero = vec![NumGrassmann::zero(g); n];
        let vals0 = self.values(0.0, &zero, schedule);
        let b = self.field(&vals0);
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut probe = zero.clone();
            probe[j] = NumGrassmann::real(g, 1.0);
            let col = self.field(&self.values(0.0, &probe, schedule));
            for i in 0..n {
                let mut d = col[i].clone();
                d.add_scaled(&b[i], -1.0);
                if d.0.iter().skip(1).any(|c| *c != 0.0) {
                    return Err(DynamicsError::SchemeMismatch(format!(
                        "d{}/dt has a Grassmann-valued linear coefficient",
                        t.name(self.layout.vars[i])
                    )));
                }
                a[(i, j)] = d.body();
            }
        }
        Ok((a, b))
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub flow: Flow,
    pub schedule: MultiplierSchedule,
    pub states: Vec<TrajectoryState>,
}

impl Trajectory {
    /// Numeric values of `e` along the trajectory.
    pub fn observe(&self, e: &GradedExpr) -> Result<Vec<NumGrassmann>, DynamicsError> {
        let c = Compiled::new(e, &self.flow.table)?;
        Ok(self
            .states
            .iter()
            .map(|s| c.eval(&self.flow.values(s.t, &s.grassmann, &self.schedule)))
            .collect())
    }

    pub fn last(&self) -> &TrajectoryState {
        self.states.last().expect("trajectory has the initial state")
    }

    /// Body of a phase variable at every recorded time.
    pub fn series(&self, v: VarId) -> Option<Vec<f64>> {
        let i = self.flow.layout.vars.iter().position(|w| *w == v)?;
        Some(self.states.iter().map(|s| s.grassmann[i].body()).collect())
    }
}

/// Integrates the flow of `H` from `x0` for `cfg.steps` steps.
pub fn evolve_flow(
    flow: &Flow,
    x0: &BTreeMap<VarId, NumGrassmann>,
    schedule: &MultiplierSchedule,
    cfg: &EvolveConfig,
) -> Result<Trajectory, DynamicsError> {
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(DynamicsError::BadConfig(format!("dt = {} must be positive", cfg.dt)));
    }
    flow.check_schedule(schedule)?;
    let mut x = flow.initial_state(x0)?;
    let n_even = flow.layout.even.len();
    let mut s = DMatrix::identity(n_even, n_even);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    states.push(flow.state(0.0, x.clone(), s.clone())?);
    match cfg.scheme {
        Scheme::Rk4 => {
            for k in 0..cfg.steps {
                let t = k as f64 * cfg.dt;
                let (xn, sn) = flow.rk4_step(t, &x, &s, cfg.dt, schedule);
                x = xn;
                s = sn;
                states.push(flow.state((k + 1) as f64 * cfg.dt, x.clone(), s.clone())?);
            }
        }
        Scheme::ExactLinear => {
            let (a, b) = flow.affine_parts(schedule)?;
            let n = a.nrows();
            // exp([[A, 1], [0, 0]] dt) = [[e^{A dt}, ∫₀^dt e^{As} ds], [0, 1]]
            let mut aug = DMatrix::zeros(2 * n, 2 * n);
            aug.view_mut((0, 0), (n, n)).copy_from(&(&a * cfg.dt));
            aug.view_mut((0, n), (n, n)).copy_from(&(DMatrix::<f64>::identity(n, n) * cfg.dt));
            let e = aug.exp();
            let phi = e.view((0, 0), (n, n)).into_owned();
            let psi = e.view((0, n), (n, n)).into_owned();
            let phi_even = DMatrix::from_fn(n_even, n_even, |i, j| phi[(flow.layout.even[i], flow.layout.even[j])]);
            let comps = 1usize << flow.table.generators();
            for k in 0..cfg.steps {
                let mut xn = x.clone();
                for c in 0..comps {
                    let y = DVector::from_iterator(n, x.iter().map(|v| v.0[c]));
                    let bc = DVector::from_iterator(n, b.iter().map(|v| v.0[c]));
                    let yn = &phi * y + &psi * bc;
                    for i in 0..n {
                        xn[i].0[c] = yn[i];
                    }
                }
                x = xn;
                s = &phi_even * s;
                states.push(flow.state((k + 1) as f64 * cfg.dt, x.clone(), s.clone())?);
            }
        }
    }
    Ok(Trajectory { flow: flow.clone(), schedule: schedule.clone(), states })
}

/// Builds the flow of the report's total (or extended) Hamiltonian and integrates it.
pub fn evolve(
    report: &ConstraintReport,
    x0: &BTreeMap<VarId, NumGrassmann>,
    schedule: &MultiplierSchedule,
    cfg: &EvolveConfig,
) -> Result<Trajectory, DynamicsError> {
    let h = match cfg.generator {
        Generator::Total => &report.total_hamiltonian,
        Generator::Extended => &report.extended_hamiltonian,
    };
    let bracket = match cfg.bracket {
        BracketMode::Poisson => Bracket::Poisson,
        BracketMode::Dirac => Bracket::Dirac(&report.second_class_set),
    };
    let flow = Flow::new(&report.table, h, bracket)?;
    evolve_flow(&flow, x0, schedule, cfg)
}

/// `max_t ‖Sᵀ J S − J‖_max` on the even sector.
pub fn symplectic_check(traj: &Trajectory) -> f64 {
    let j = traj.flow.layout.symplectic_unit();
    traj.states
        .iter()
        .map(|s| (s.monodromy.transpose() * &j * &s.monodromy - &j).amax())
        .fold(0.0, f64::max)
}

/// Per constraint of the chain: `max_t |φ_h(x(t))|` (largest Grassmann component).
pub fn constraint_drift(traj: &Trajectory, report: &ConstraintReport) -> Result<Vec<f64>, DynamicsError> {
    report
        .constraints()
        .iter()
        .map(|phi| Ok(traj.observe(phi)?.iter().map(NumGrassmann::norm).fold(0.0, f64::max)))
        .collect()
}

/// Per charge: `max_t |Q(x(t), t) − Q(x₀, 0)|`.
pub fn conservation_report(traj: &Trajectory, charges: &[GradedExpr]) -> Result<Vec<f64>, DynamicsError> {
    charges
        .iter()
        .map(|q| {
            let vals = traj.observe(q)?;
            let q0 = vals[0].clone();
            Ok(vals
                .iter()
                .map(|v| {
                    let mut d = v.clone();
                    d.add_scaled(&q0, -1.0);
                    d.norm()
                })
                .fold(0.0, f64::max))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeDifference {
    pub measured: f64,
    pub predicted: f64,
}

impl GaugeDifference {
    pub fn discrepancy(&self) -> f64 {
        (self.measured - self.predicted).abs()
    }
}

/// One step under two multiplier schedules: the measured change of `F` against the
/// first-order prediction `Σ_i [F, φ^{1st}_i}(v₂^i − v₁^i) δt` at `x₀`.
pub fn gauge_difference(
    report: &ConstraintReport,
    x0: &BTreeMap<VarId, NumGrassmann>,
    schedule1: &MultiplierSchedule,
    schedule2: &MultiplierSchedule,
    observable: &GradedExpr,
    dt: f64,
) -> Result<GaugeDifference, DynamicsError> {
    let t = &report.table;
    let cfg = EvolveConfig::rk4(dt, 1);
    let a = evolve(report, x0, schedule1, &cfg)?;
    let b = evolve(report, x0, schedule2, &cfg)?;
    let fa = a.observe(observable)?;
    let fb = b.observe(observable)?;
    let measured = fb[1].body() - fa[1].body();
    let vals = a.flow.values(0.0, &a.states[0].grassmann, schedule1);
    let mut predicted = 0.0;
    for (phi, v) in report.primary_first_class.iter().zip(&report.free_multipliers) {
        let dv = schedule2.value(*v, 0.0) - schedule1.value(*v, 0.0);
        if dv == 0.0 {
            continue;
        }
        let br = crate::brackets::poisson(observable, phi, t)?;
        predicted += Compiled::new(&br, t)?.eval_body(&vals) * dv * dt;
    }
    Ok(GaugeDifference { measured, predicted })
}
