//! The `analyze` pipeline and its structured report.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use gradmech::brst::GhostAlgebra;
use gradmech::constraints::{
    hamiltonian_to_lagrangian, primary_constraints, run_dirac_bergmann, verify_constraint_set, ConstraintReport,
    HamiltonianModel, LagrangianModel, PrimaryAnalysis,
};
use gradmech::dynamics::{
    conservation_report, constraint_drift, evolve, symplectic_check, BracketMode, EvolveConfig, Generator, Scheme,
    Trajectory,
};
use gradmech::symalg::{GradedExpr, VariableTable};
use gradmech::symmetry::{
    gauge_generator_conditions, is_symmetry_generator, noether_charge, total_noether_charge,
    verify_offshell_invariance,
};

use crate::json::{self, MatrixJson};
use crate::model::{self, DynamicsDecl, Mechanics, ModelFile, SCHEMA_VERSION};
use crate::{CliError, Format, Options};

/// A model file taken through the Legendre map and the constraint analysis.
#[derive(Clone, Debug)]
pub struct Session {
    pub file: ModelFile,
    pub lagrangian: Option<LagrangianModel>,
    pub legendre: Option<PrimaryAnalysis>,
    pub hm: HamiltonianModel,
    /// `φ̇_h = Σ φ_h′ T^{h′}_h` when the chain was supplied by hand.
    pub witness: Option<Vec<Vec<GradedExpr>>>,
    pub report: ConstraintReport,
}

impl Session {
    /// `Ok(None)` for files with only a `brst` section.
    pub fn new(file: ModelFile) -> Result<Option<Session>, CliError> {
        let (lagrangian, legendre, hm) = match file.mechanics()? {
            None => return Ok(None),
            Some(Mechanics::Lagrangian(lm)) => {
                let pa = primary_constraints(&lm).map_err(CliError::analysis)?;
                let hm = pa.model.clone();
                (Some(lm), Some(pa), hm)
            }
            Some(Mechanics::Hamiltonian(hm)) => (None, None, hm),
        };
        let (witness, report) = if file.manual_constraints.is_empty() {
            (None, run_dirac_bergmann(&hm).map_err(CliError::analysis)?)
        } else {
            let manual = file
                .manual_constraints
                .iter()
                .map(|s| model::expr(s, &hm.table))
                .collect::<Result<Vec<_>, _>>()?;
            let v = verify_constraint_set(&hm, &manual, None).map_err(CliError::analysis)?;
            (Some(v.t), v.report)
        };
        Ok(Some(Session { file, lagrangian, legendre, hm, witness, report }))
    }

    pub fn table(&self) -> &VariableTable {
        &self.report.table
    }

    pub fn render(&self, e: &GradedExpr) -> String {
        e.render(self.table())
    }

    /// The Lagrangian, recovered by the inverse Legendre map for Hamiltonian files.
    pub fn lagrangian_model(&self) -> Result<LagrangianModel, CliError> {
        match &self.lagrangian {
            Some(l) => Ok(l.clone()),
            None => hamiltonian_to_lagrangian(&self.hm).map_err(CliError::analysis),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MomentumJson {
    pub position: String,
    pub momentum: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegendreJson {
    pub momenta: Vec<MomentumJson>,
    /// Even and odd rank of the velocity map.
    pub velocity_rank: [usize; 2],
    pub independent: Vec<String>,
    pub constrained: Vec<String>,
    pub hamiltonian: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub expr: String,
    pub tier: u32,
    pub class: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiplierJson {
    pub symbol: String,
    pub value: String,
    pub determined: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FreeMultiplierJson {
    pub symbol: String,
    pub constraint: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryJson {
    pub name: String,
    pub invariant: bool,
    pub residual: Option<String>,
    pub noether_charge: Option<String>,
    pub total_charge: Option<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorJson {
    pub candidate: String,
    pub generator: bool,
    pub delta_v: Vec<String>,
    pub delta_w: Vec<(usize, usize, String)>,
    pub time_shift: String,
    pub residual: String,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaugeJson {
    pub first_class: Vec<String>,
    pub primary_count: usize,
    pub tau: Vec<Vec<String>>,
    pub ode_rows: usize,
    pub constant: bool,
    pub quadratic: Vec<bool>,
    pub flags: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DriftJson {
    pub expr: String,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DynamicsJson {
    pub scheme: String,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub final_state: BTreeMap<String, f64>,
    pub symplectic_defect: f64,
    pub constraint_drift: Vec<DriftJson>,
    pub conservation: Vec<DriftJson>,
    pub tolerance: f64,
    pub within_tolerance: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BrstJson {
    pub dimension: usize,
    pub nilpotency_samples: usize,
    pub nilpotent: bool,
    pub nilpotency_defects: Vec<(String, String)>,
    pub homotopy_samples: usize,
    pub homotopy: bool,
    pub homotopy_failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub schema_version: u32,
    pub name: String,
    pub legendre: Option<LegendreJson>,
    pub hamiltonian: Option<String>,
    pub primary_constraints: Vec<String>,
    pub constraints: Vec<ConstraintJson>,
    /// `T[h′][h]` certifying a hand-supplied chain.
    pub witness: Option<Vec<Vec<String>>>,
    pub multipliers: Vec<MultiplierJson>,
    pub free_multipliers: Vec<FreeMultiplierJson>,
    pub first_class: Vec<String>,
    pub second_class: Vec<String>,
    pub primary_first_class: Vec<String>,
    pub secondary_first_class: Vec<FreeMultiplierJson>,
    pub total_hamiltonian: Option<String>,
    pub extended_hamiltonian: Option<String>,
    pub extended_equals_total: Option<bool>,
    pub dof: Option<String>,
    pub primary_ranks: Option<BTreeMap<String, usize>>,
    pub omega: Option<MatrixJson>,
    pub symmetries: Vec<SymmetryJson>,
    pub generator_checks: Vec<GeneratorJson>,
    pub gauge: Option<GaugeJson>,
    pub gauge_error: Option<String>,
    pub dynamics: Option<DynamicsJson>,
    pub brst: Option<BrstJson>,
    pub caveats: Vec<String>,
}

impl AnalysisReport {
    fn empty(name: &str) -> Self {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            legendre: None,
            hamiltonian: None,
            primary_constraints: vec![],
            constraints: vec![],
            witness: None,
            multipliers: vec![],
            free_multipliers: vec![],
            first_class: vec![],
            second_class: vec![],
            primary_first_class: vec![],
            secondary_first_class: vec![],
            total_hamiltonian: None,
            extended_hamiltonian: None,
            extended_equals_total: None,
            dof: None,
            primary_ranks: None,
            omega: None,
            symmetries: vec![],
            generator_checks: vec![],
            gauge: None,
            gauge_error: None,
            dynamics: None,
            brst: None,
            caveats: vec![],
        }
    }
}

/// Verdicts for the declared symmetries, plus the total charges that passed.
pub fn symmetry_section(s: &Session) -> Result<(Vec<SymmetryJson>, Vec<(String, GradedExpr)>), CliError> {
    if s.file.symmetries.is_empty() {
        return Ok((vec![], vec![]));
    }
    let lm = s.lagrangian_model()?;
    let candidates = s.file.symmetry_candidates(&lm.table)?;
    let mut out = Vec::new();
    let mut charges = Vec::new();
    for (name, c) in candidates {
        let mut j = SymmetryJson {
            name: name.clone(),
            invariant: false,
            residual: None,
            noether_charge: None,
            total_charge: None,
            error: None,
        };
        match verify_offshell_invariance(&lm, &c) {
            Err(e) => j.error = Some(e.to_string()),
            Ok(Some(r)) => j.residual = Some(r.render(&lm.table)),
            Ok(None) => {
                j.invariant = true;
                match noether_charge(&lm, &c) {
                    Ok(q) => j.noether_charge = Some(q.render(&lm.table)),
                    Err(e) => j.error = Some(e.to_string()),
                }
                if j.error.is_none() {
                    match total_noether_charge(&lm, &c, &s.hm, &s.report) {
                        Ok(q) => {
                            j.total_charge = Some(s.render(&q));
                            charges.push((name, q));
                        }
                        Err(e) => j.error = Some(e.to_string()),
                    }
                }
            }
        }
        out.push(j);
    }
    Ok((out, charges))
}

fn dynamics_config(d: &DynamicsDecl) -> Result<EvolveConfig, CliError> {
    let scheme = match d.scheme.as_str() {
        "rk4" => Scheme::Rk4,
        "exact-linear" | "exact_linear" => Scheme::ExactLinear,
        s => return Err(CliError::Input(format!("unknown scheme {s:?}"))),
    };
    let generator = match d.generator.as_str() {
        "total" => Generator::Total,
        "extended" => Generator::Extended,
        s => return Err(CliError::Input(format!("unknown generator {s:?}"))),
    };
    let bracket = match d.bracket.as_str() {
        "poisson" => BracketMode::Poisson,
        "dirac" => BracketMode::Dirac,
        s => return Err(CliError::Input(format!("unknown bracket {s:?}"))),
    };
    Ok(EvolveConfig { dt: d.dt, steps: d.steps, scheme, generator, bracket })
}

/// Integrates the model's dynamics section and summarizes the diagnostics.
pub fn run_dynamics(
    s: &Session,
    d: &DynamicsDecl,
    charges: &[(String, GradedExpr)],
    tolerance: f64,
) -> Result<(Trajectory, DynamicsJson), CliError> {
    let t = s.table();
    let cfg = dynamics_config(d)?;
    let x0 = model::initial_state(&d.x0, t)?;
    let schedule = model::schedule(&d.schedules, t)?;
    let traj = evolve(&s.report, &x0, &schedule, &cfg).map_err(CliError::analysis)?;
    let json = diagnostics(s, d, &traj, charges, tolerance)?;
    Ok((traj, json))
}

pub fn diagnostics(
    s: &Session,
    d: &DynamicsDecl,
    traj: &Trajectory,
    charges: &[(String, GradedExpr)],
    tolerance: f64,
) -> Result<DynamicsJson, CliError> {
    let t = s.table();
    let last = traj.last();
    let final_state = traj
        .flow
        .layout
        .vars
        .iter()
        .zip(&last.grassmann)
        .map(|(v, x)| (t.name(*v).to_string(), x.body()))
        .collect();
    let symplectic_defect = symplectic_check(traj);
    let drift = constraint_drift(traj, &s.report).map_err(CliError::analysis)?;
    let exprs: Vec<GradedExpr> = charges.iter().map(|(_, q)| q.clone()).collect();
    let cons = conservation_report(traj, &exprs).map_err(CliError::analysis)?;
    let constraint_drift: Vec<DriftJson> =
        s.report.chain.iter().zip(drift).map(|((c, _), m)| DriftJson { expr: s.render(c), max: m }).collect();
    let conservation: Vec<DriftJson> =
        charges.iter().zip(cons).map(|((n, _), m)| DriftJson { expr: n.clone(), max: m }).collect();
    let within_tolerance = symplectic_defect <= tolerance
        && constraint_drift.iter().all(|c| c.max <= tolerance)
        && conservation.iter().all(|c| c.max <= tolerance);
    Ok(DynamicsJson {
        scheme: d.scheme.clone(),
        dt: d.dt,
        steps: d.steps,
        final_time: last.t,
        final_state,
        symplectic_defect,
        constraint_drift,
        conservation,
        tolerance,
        within_tolerance,
    })
}

/// Nilpotency and contracting-homotopy checks on the file's Lie algebra.
pub fn brst_section(file: &ModelFile, samples: usize) -> Result<Option<BrstJson>, CliError> {
    let Some(spec) = file.lie_algebra()? else { return Ok(None) };
    let dimension = spec.dim();
    let g = GhostAlgebra::new(spec).map_err(CliError::analysis)?;
    let nil = g.nilpotency_check(samples, 0).map_err(CliError::analysis)?;
    let failures = crate::commands::homotopy_failures(&g, samples, 0)?;
    let mut defects = nil.generator_defects.clone();
    defects.extend(nil.sample_defects.iter().cloned());
    Ok(Some(BrstJson {
        dimension,
        nilpotency_samples: samples,
        nilpotent: nil.passed(),
        nilpotency_defects: defects,
        homotopy_samples: samples,
        homotopy: failures.is_empty(),
        homotopy_failures: failures,
    }))
}

pub fn analyze_file(file: ModelFile, opts: &Options) -> Result<AnalysisReport, CliError> {
    let mut out = AnalysisReport::empty(&file.name);
    out.brst = brst_section(&file, 20)?;
    let Some(s) = Session::new(file)? else { return Ok(out) };
    let r = &s.report;
    let t = s.table();
    let render = |e: &GradedExpr| e.render(t);

    if let Some(pa) = &s.legendre {
        out.legendre = Some(LegendreJson {
            momenta: t
                .canonical_pairs()
                .iter()
                .zip(&pa.momenta)
                .map(|((q, _), p)| MomentumJson { position: t.name(*q).into(), momentum: render(p) })
                .collect(),
            velocity_rank: [pa.velocity_rank.0, pa.velocity_rank.1],
            independent: pa.independent.iter().map(|v| t.name(*v).to_string()).collect(),
            constrained: pa.constrained.iter().map(|v| t.name(*v).to_string()).collect(),
            hamiltonian: render(&pa.model.hamiltonian),
        });
        out.caveats.extend(pa.caveats.iter().cloned());
    }
    out.hamiltonian = Some(render(&s.hm.hamiltonian));
    out.primary_constraints = s.hm.primary.iter().map(&render).collect();
    out.constraints = r
        .chain
        .iter()
        .enumerate()
        .map(|(h, (c, tier))| ConstraintJson {
            expr: render(c),
            tier: *tier,
            class: if r.second_class.contains(&h) { "second" } else { "first" }.into(),
        })
        .collect();
    out.witness = s.witness.as_ref().map(|w| w.iter().map(|row| row.iter().map(&render).collect()).collect());
    out.multipliers = s
        .hm
        .multipliers
        .iter()
        .zip(&r.multipliers)
        .zip(&r.determined)
        .map(|((u, v), d)| MultiplierJson { symbol: t.name(*u).into(), value: render(v), determined: *d })
        .collect();
    out.free_multipliers = r
        .free_multipliers
        .iter()
        .zip(&r.primary_first_class)
        .map(|(v, c)| FreeMultiplierJson { symbol: t.name(*v).into(), constraint: render(c) })
        .collect();
    out.first_class = r.first_class_constraints.iter().map(&render).collect();
    out.second_class = r.second_class.iter().map(|h| render(&r.chain[*h].0)).collect();
    out.primary_first_class = r.primary_first_class.iter().map(&render).collect();
    out.secondary_first_class = r
        .extended_multipliers
        .iter()
        .zip(&r.secondary_first_class)
        .map(|(v, c)| FreeMultiplierJson { symbol: t.name(*v).into(), constraint: render(c) })
        .collect();
    out.total_hamiltonian = Some(render(&r.total_hamiltonian));
    out.extended_hamiltonian = Some(render(&r.extended_hamiltonian));
    out.extended_equals_total = Some(r.extended_hamiltonian == r.total_hamiltonian);
    out.dof = Some(json::rational(&r.dof));
    out.primary_ranks =
        Some([("k_minus".to_string(), r.primary_ranks.0), ("k_plus".to_string(), r.primary_ranks.1)].into());
    out.omega = Some(json::matrix(&r.omega_full));
    out.caveats.extend(r.caveats.iter().cloned());

    let (syms, charges) = symmetry_section(&s)?;
    out.symmetries = syms;

    for c in &s.file.generator_candidates {
        let q = model::expr(c, t)?;
        out.generator_checks.push(match is_symmetry_generator(&q, &s.hm, r) {
            Ok(g) => GeneratorJson {
                candidate: c.clone(),
                generator: g.generator,
                delta_v: g.delta_v.iter().map(&render).collect(),
                delta_w: g.delta_w.iter().map(|(a, b, e)| (*a, *b, render(e))).collect(),
                time_shift: render(&g.time_shift),
                residual: render(&g.residual),
                error: None,
            },
            Err(e) => GeneratorJson {
                candidate: c.clone(),
                generator: false,
                delta_v: vec![],
                delta_w: vec![],
                time_shift: "0".into(),
                residual: String::new(),
                error: Some(e.to_string()),
            },
        });
    }

    match gauge_generator_conditions(r, &s.hm) {
        Ok(gc) => {
            out.gauge = Some(GaugeJson {
                first_class: gc.first_class.iter().map(&render).collect(),
                primary_count: gc.primary_count,
                tau: gc.tau.iter().map(|row| row.iter().map(&render).collect()).collect(),
                ode_rows: gc.ode_rows(),
                constant: gc.constant,
                quadratic: gc.quadratic.clone(),
                flags: gc.flags.clone(),
            });
            out.caveats.extend(gc.flags.iter().cloned());
        }
        Err(e) => out.gauge_error = Some(e.to_string()),
    }

    if let Some(d) = &s.file.dynamics {
        let (_, j) = run_dynamics(&s, d, &charges, opts.tolerance)?;
        out.dynamics = Some(j);
    }
    Ok(out)
}

pub fn render_text(r: &AnalysisReport) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "model: {}", r.name);
    if let Some(h) = &r.hamiltonian {
        let _ = writeln!(s, "canonical hamiltonian: {h}");
    }
    if !r.constraints.is_empty() {
        let _ = writeln!(s, "constraints:");
        for c in &r.constraints {
            let _ = writeln!(s, "  [tier {}] {:<24} {}-class", c.tier, c.expr, c.class);
        }
    }
    for m in &r.multipliers {
        let _ = writeln!(s, "multiplier {} = {}{}", m.symbol, m.value, if m.determined { "" } else { "  (free)" });
    }
    if let Some(h) = &r.total_hamiltonian {
        let _ = writeln!(s, "H_T = {h}");
    }
    if let Some(h) = &r.extended_hamiltonian {
        let _ = writeln!(s, "H_E = {h}");
    }
    if let Some(d) = &r.dof {
        let _ = writeln!(s, "degrees of freedom: {d}");
    }
    for y in &r.symmetries {
        let verdict = match (&y.error, &y.residual) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(res)) => format!("not a symmetry (residual {res})"),
            _ => format!("Q = {}, Q_T = {}", y.noether_charge.as_deref().unwrap_or("?"), y.total_charge.as_deref().unwrap_or("?")),
        };
        let _ = writeln!(s, "symmetry {}: {verdict}", y.name);
    }
    for g in &r.generator_checks {
        let verdict = match &g.error {
            Some(e) => format!("error: {e}"),
            None if g.generator => "generator".to_string(),
            None => format!("not a generator (residual {})", g.residual),
        };
        let _ = writeln!(s, "candidate {}: {verdict}", g.candidate);
    }
    if let Some(d) = &r.dynamics {
        let _ = writeln!(
            s,
            "dynamics: t = {}, symplectic defect {:.3e}, max constraint drift {:.3e}",
            d.final_time,
            d.symplectic_defect,
            d.constraint_drift.iter().map(|c| c.max).fold(0.0, f64::max)
        );
    }
    if let Some(b) = &r.brst {
        let _ = writeln!(s, "brst: nilpotent {}, homotopy {}", b.nilpotent, b.homotopy);
    }
    for c in &r.caveats {
        let _ = writeln!(s, "caveat: {c}");
    }
    s
}

pub fn format_report(r: &AnalysisReport, format: Format) -> String {
    match format {
        Format::Json => json::to_string(r),
        Format::Text => render_text(r),
    }
}

/// Analyzes each file, fanning out over `opts.jobs` threads; results keep the input order.
pub fn analyze_paths(paths: &[PathBuf], opts: &Options) -> Vec<Result<AnalysisReport, CliError>> {
    let run = |p: &PathBuf| ModelFile::load(p).and_then(|f| analyze_file(f, opts));
    let jobs = opts.jobs.max(1);
    if jobs == 1 || paths.len() < 2 {
        return paths.iter().map(run).collect();
    }
    let chunk = paths.len().div_ceil(jobs);
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            paths.chunks(chunk).map(|ps| scope.spawn(move || ps.iter().map(run).collect::<Vec<_>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("analysis thread panicked")).collect()
    })
}
