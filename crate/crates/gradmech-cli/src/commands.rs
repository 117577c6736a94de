//! `bracket`, `evolve`, `canon` and `brst`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use gradmech::brackets::{build_second_class, Bracket};
use gradmech::brst::GhostAlgebra;
use gradmech::dynamics::{gauge_difference, MultiplierSchedule};
use gradmech::random;
use gradmech::superalgebra::{
    canonical_form_antihermitian, canonical_form_antisym, canonical_form_bosonic, canonical_form_generic, desoul,
    CanonicalFormResult, GrassmannNumber, Parity, SuperMatrix,
};
use gradmech::symalg::{GradedExpr, VariableTable};

use crate::analyze::{self, DynamicsJson, Session};
use crate::json::{self, MatrixJson};
use crate::model::{self, DynamicsDecl, ModelFile, SCHEMA_VERSION};
use crate::{CliError, Format, Options};

fn session(file: ModelFile) -> Result<Session, CliError> {
    Session::new(file)?.ok_or_else(|| CliError::Input("model has no lagrangian or hamiltonian".into()))
}

// ---------------------------------------------------------------- bracket

#[derive(Serialize)]
struct BracketJson<'a> {
    schema_version: u32,
    lhs: &'a str,
    rhs: &'a str,
    bracket: &'static str,
    second_class: Vec<String>,
    result: String,
}

/// `dirac`: `None` for the Poisson bracket, `Some(None)` for the report's second-class set,
/// `Some(Some(list))` for a comma-separated `ρ` list.
pub fn bracket(
    file: ModelFile,
    lhs: &str,
    rhs: &str,
    dirac: Option<Option<&str>>,
    opts: &Options,
) -> Result<String, CliError> {
    let s = session(file)?;
    let t = s.table();
    let f = model::expr(lhs, t)?;
    let g = model::expr(rhs, t)?;
    let custom;
    let (name, scs) = match dirac {
        None => ("poisson", None),
        Some(None) => ("dirac", Some(&s.report.second_class_set)),
        Some(Some(list)) => {
            let rho = list
                .split(',')
                .filter(|x| !x.trim().is_empty())
                .map(|x| model::expr(x.trim(), t))
                .collect::<Result<Vec<_>, _>>()?;
            custom = build_second_class(rho, t).map_err(CliError::analysis)?;
            ("dirac", Some(&custom))
        }
    };
    let b = match scs {
        None => Bracket::Poisson,
        Some(scs) => Bracket::Dirac(scs),
    };
    let r = b.apply(&f, &g, t).map_err(|e| CliError::Input(e.to_string()))?;
    let result = r.render(t);
    Ok(match opts.format {
        Format::Text => format!("{result}\n"),
        Format::Json => json::to_string(&BracketJson {
            schema_version: SCHEMA_VERSION,
            lhs,
            rhs,
            bracket: name,
            second_class: scs.map(|x| x.rho.iter().map(|e| e.render(t)).collect()).unwrap_or_default(),
            result,
        }),
    })
}

// ---------------------------------------------------------------- evolve

/// Command-line overrides of the dynamics section.
#[derive(Clone, Debug, Default)]
pub struct EvolveOverrides {
    pub dt: Option<f64>,
    pub steps: Option<usize>,
    pub scheme: Option<String>,
    pub generator: Option<String>,
    pub bracket: Option<String>,
    pub every: usize,
    pub compare: bool,
}

fn dynamics_decl(file: &ModelFile, o: &EvolveOverrides) -> Result<DynamicsDecl, CliError> {
    let mut d = match (&file.dynamics, o.dt, o.steps) {
        (Some(d), _, _) => d.clone(),
        (None, Some(dt), Some(steps)) => DynamicsDecl {
            x0: BTreeMap::new(),
            dt,
            steps,
            scheme: "rk4".into(),
            schedules: BTreeMap::new(),
            generator: "total".into(),
            bracket: "poisson".into(),
            compare: None,
        },
        _ => return Err(CliError::Input("no dynamics section; pass both --dt and --steps".into())),
    };
    if let Some(x) = o.dt {
        d.dt = x;
    }
    if let Some(x) = o.steps {
        d.steps = x;
    }
    if let Some(x) = &o.scheme {
        d.scheme = x.clone();
    }
    if let Some(x) = &o.generator {
        d.generator = x.clone();
    }
    if let Some(x) = &o.bracket {
        d.bracket = x.clone();
    }
    Ok(d)
}

#[derive(Serialize)]
struct Header<'a> {
    r#type: &'static str,
    schema_version: u32,
    model: &'a str,
    scheme: &'a str,
    generator: &'a str,
    bracket: &'a str,
    dt: f64,
    steps: usize,
    variables: Vec<String>,
}

#[derive(Serialize)]
struct Record {
    r#type: &'static str,
    step: usize,
    t: f64,
    x: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    components: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Serialize)]
struct Summary<'a> {
    r#type: &'static str,
    #[serde(flatten)]
    diagnostics: &'a DynamicsJson,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeRow {
    pub observable: String,
    pub dt: f64,
    pub measured: f64,
    pub predicted: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeTable {
    pub r#type: &'static str,
    pub schema_version: u32,
    pub rows: Vec<GaugeRow>,
    /// Per observable: discrepancy at `dt` over discrepancy at `dt/2`.
    pub shrink: BTreeMap<String, Option<f64>>,
}

fn line<T: Serialize>(out: &mut String, v: &T) {
    out.push_str(&serde_json::to_string(v).expect("records serialize"));
    out.push('\n');
}

pub fn gauge_table(s: &Session, d: &DynamicsDecl) -> Result<GaugeTable, CliError> {
    let t = s.table();
    let cmp = d.compare.as_ref().ok_or_else(|| CliError::Input("--compare needs dynamics.compare".into()))?;
    let x0 = model::initial_state(&d.x0, t)?;
    let s1: MultiplierSchedule = model::schedule(cmp.base.as_ref().unwrap_or(&d.schedules), t)?;
    let s2 = model::schedule(&cmp.schedules, t)?;
    let mut rows = Vec::new();
    let mut shrink = BTreeMap::new();
    for obs in &cmp.observables {
        let f = model::expr(obs, t)?;
        let mut disc = Vec::new();
        for dt in [d.dt, d.dt / 2.0] {
            let g = gauge_difference(&s.report, &x0, &s1, &s2, &f, dt).map_err(CliError::analysis)?;
            disc.push(g.discrepancy());
            rows.push(GaugeRow {
                observable: obs.clone(),
                dt,
                measured: g.measured,
                predicted: g.predicted,
                discrepancy: g.discrepancy(),
            });
        }
        shrink.insert(obs.clone(), if disc[1] > 0.0 { Some(disc[0] / disc[1]) } else { None });
    }
    Ok(GaugeTable { r#type: "gauge_difference", schema_version: SCHEMA_VERSION, rows, shrink })
}

pub fn evolve(file: ModelFile, o: &EvolveOverrides, opts: &Options) -> Result<String, CliError> {
    let d = dynamics_decl(&file, o)?;
    let s = session(file)?;
    let t = s.table();
    let mut out = String::new();
    if o.compare {
        let table = gauge_table(&s, &d)?;
        match opts.format {
            Format::Json => out = json::to_string(&table),
            Format::Text => {
                let _ = writeln!(out, "{:<16} {:>10} {:>14} {:>14} {:>12}", "observable", "dt", "measured", "predicted", "discrepancy");
                for r in &table.rows {
                    let _ = writeln!(
                        out,
                        "{:<16} {:>10.3e} {:>14.6e} {:>14.6e} {:>12.3e}",
                        r.observable, r.dt, r.measured, r.predicted, r.discrepancy
                    );
                }
            }
        }
        return Ok(out);
    }

    let layout_names: Vec<String> =
        gradmech::dynamics::PhaseLayout::new(t).vars.iter().map(|v| t.name(*v).to_string()).collect();
    let header = Header {
        r#type: "header",
        schema_version: SCHEMA_VERSION,
        model: &s.file.name,
        scheme: &d.scheme,
        generator: &d.generator,
        bracket: &d.bracket,
        dt: d.dt,
        steps: d.steps,
        variables: layout_names.clone(),
    };
    let text = opts.format == Format::Text;
    if text {
        let _ = writeln!(out, "# {} scheme={} dt={} steps={}", s.file.name, d.scheme, d.dt, d.steps);
        let _ = writeln!(out, "# t {}", layout_names.join(" "));
    } else {
        line(&mut out, &header);
    }
    if d.steps == 0 {
        return Ok(out);
    }
    let (_, charges) = analyze::symmetry_section(&s)?;
    let (traj, diag) = analyze::run_dynamics(&s, &d, &charges, opts.tolerance)?;
    let every = o.every.max(1);
    let g = t.generators();
    for (k, st) in traj.states.iter().enumerate() {
        if k % every != 0 && k != traj.states.len() - 1 {
            continue;
        }
        if text {
            let vals: Vec<String> = st.grassmann.iter().map(|x| format!("{:.12e}", x.body())).collect();
            let _ = writeln!(out, "{} {}", st.t, vals.join(" "));
            continue;
        }
        let x = layout_names.iter().cloned().zip(st.grassmann.iter().map(|v| v.body())).collect();
        let components =
            (g > 0).then(|| layout_names.iter().cloned().zip(st.grassmann.iter().map(|v| v.0.clone())).collect());
        line(&mut out, &Record { r#type: "state", step: k, t: st.t, x, components });
    }
    if text {
        let _ = writeln!(
            out,
            "# symplectic defect {:.3e}; constraint drift {:.3e}; conservation drift {:.3e}",
            diag.symplectic_defect,
            diag.constraint_drift.iter().map(|c| c.max).fold(0.0, f64::max),
            diag.conservation.iter().map(|c| c.max).fold(0.0, f64::max)
        );
    } else {
        line(&mut out, &Summary { r#type: "summary", diagnostics: &diag });
    }
    Ok(out)
}

// ---------------------------------------------------------------- canon

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum CanonKind {
    Generic,
    Antisym,
    Antihermitian,
    Desoul,
    Bosonic,
}

#[derive(Serialize)]
struct LayoutJson {
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
    zero_blocks: Vec<(usize, usize)>,
    soul_blocks: Vec<(usize, usize)>,
    identity_blocks: Vec<usize>,
    invertible_blocks: Vec<usize>,
    diagonal_blocks: Vec<usize>,
}

#[derive(Serialize)]
struct CanonJson {
    schema_version: u32,
    kind: CanonKind,
    input: MatrixJson,
    canonical: MatrixJson,
    left: MatrixJson,
    right: MatrixJson,
    rank_data: BTreeMap<String, usize>,
    layout: LayoutJson,
    verified: bool,
}

impl Serialize for CanonKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            CanonKind::Generic => "generic",
            CanonKind::Antisym => "antisym",
            CanonKind::Antihermitian => "antihermitian",
            CanonKind::Desoul => "desoul",
            CanonKind::Bosonic => "bosonic",
        })
    }
}

fn constant(v: &Value, table: &VariableTable) -> Result<GrassmannNumber, CliError> {
    let g = table.generators();
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            let q = model::parse_rational(&s).map_err(|_| CliError::Input(format!("matrix entries must be exact: {s}")))?;
            Ok(GrassmannNumber::scalar(g, q))
        }
        Value::String(s) => model::expr(s, table)?
            .as_constant()
            .ok_or_else(|| CliError::Input(format!("matrix entry {s:?} is not a constant"))),
        _ => Err(CliError::Input(format!("bad matrix entry {v}"))),
    }
}

fn parities(v: Option<&Value>, n: usize) -> Result<Vec<Parity>, CliError> {
    match v {
        None => Ok(vec![Parity::Even; n]),
        Some(Value::Array(a)) => a
            .iter()
            .map(|p| p.as_str().ok_or_else(|| CliError::Input("parities must be strings".into())).and_then(model::parse_parity))
            .collect(),
        Some(_) => Err(CliError::Input("parities must be a list".into())),
    }
}

/// `[[...]]` (all even, no generators) or `{generators, parities | row_parities/col_parities, entries}`.
pub fn parse_matrix(v: &Value) -> Result<SuperMatrix, CliError> {
    let (g, rows_v, row_p, col_p) = match v {
        Value::Array(_) => (0, v, None, None),
        Value::Object(o) => {
            let g = o.get("generators").and_then(Value::as_u64).unwrap_or(0) as u32;
            let e = o.get("entries").ok_or_else(|| CliError::Input("matrix object needs \"entries\"".into()))?;
            let rp = o.get("row_parities").or_else(|| o.get("parities"));
            let cp = o.get("col_parities").or_else(|| o.get("parities"));
            (g, e, rp, cp)
        }
        _ => return Err(CliError::Input("matrix must be a list of rows or an object".into())),
    };
    let table = VariableTable::new(g);
    let rows = rows_v.as_array().ok_or_else(|| CliError::Input("entries must be a list of rows".into()))?;
    let entries = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| CliError::Input("each row must be a list".into()))?
                .iter()
                .map(|x| constant(x, &table))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = entries.len();
    let m = entries.first().map_or(0, Vec::len);
    if entries.iter().any(|r| r.len() != m) {
        return Err(CliError::Input("matrix rows have different lengths".into()));
    }
    SuperMatrix::new(g, parities(row_p, n)?, parities(col_p, m)?, entries).map_err(|e| CliError::Input(e.to_string()))
}

/// Inline JSON, a matrix file, or a model file (whose constraint bracket matrix is used).
pub fn load_matrix(arg: &str) -> Result<(SuperMatrix, bool), CliError> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Input(format!("{arg}: {e}")))?
    };
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("matrix: {e}")))?;
    if v.get("entries").is_none() && v.is_object() {
        let file = ModelFile::from_json(&text)?;
        let s = session(file)?;
        return Ok((s.report.omega_full.clone(), true));
    }
    Ok((parse_matrix(&v)?, false))
}

pub fn canon_result(m: &SuperMatrix, kind: CanonKind) -> Result<CanonicalFormResult, CliError> {
    let r = match kind {
        CanonKind::Generic => canonical_form_generic(m),
        CanonKind::Antisym => canonical_form_antisym(m),
        CanonKind::Antihermitian => canonical_form_antihermitian(m),
        CanonKind::Desoul => desoul(m),
        CanonKind::Bosonic => canonical_form_bosonic(m),
    }
    .map_err(CliError::analysis)?;
    r.verify(m).map_err(|e| CliError::Analysis(format!("reconstruction self-check failed: {e}")))?;
    Ok(r)
}

pub fn canon(arg: &str, kind: Option<CanonKind>, opts: &Options) -> Result<String, CliError> {
    let (m, from_model) = load_matrix(arg)?;
    let kind = kind.unwrap_or(if from_model { CanonKind::Antihermitian } else { CanonKind::Generic });
    let r = canon_result(&m, kind)?;
    let rank_data: BTreeMap<String, usize> = r.rank_data.iter().map(|(n, k)| (n.to_string(), *k)).collect();
    Ok(match opts.format {
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "canonical:\n{}", r.canonical.render());
            let _ = writeln!(s, "left:\n{}", r.left.render());
            let _ = writeln!(s, "right:\n{}", r.right.render());
            for (n, k) in &rank_data {
                let _ = writeln!(s, "{n} = {k}");
            }
            s
        }
        Format::Json => json::to_string(&CanonJson {
            schema_version: SCHEMA_VERSION,
            kind,
            input: json::matrix(&m),
            canonical: json::matrix(&r.canonical),
            left: json::matrix(&r.left),
            right: json::matrix(&r.right),
            rank_data,
            layout: LayoutJson {
                row_sizes: r.layout.row_sizes.clone(),
                col_sizes: r.layout.col_sizes.clone(),
                zero_blocks: r.layout.zero_blocks.clone(),
                soul_blocks: r.layout.soul_blocks.clone(),
                identity_blocks: r.layout.identity_blocks.clone(),
                invertible_blocks: r.layout.invertible_blocks.clone(),
                diagonal_blocks: r.layout.diagonal_blocks.clone(),
            },
            verified: true,
        }),
    })
}

// ---------------------------------------------------------------- brst

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum BrstCheck {
    Nilpotency,
    Homotopy,
}

#[derive(Serialize)]
struct BrstCheckJson {
    schema_version: u32,
    check: &'static str,
    dimension: usize,
    generators: usize,
    samples: usize,
    passed: bool,
    counterexamples: Vec<(String, String)>,
}

/// `{Q_H, Q_B} = N` on random elements and round trips of `decompose_closed` on
/// constructed closed elements; each failure is described by one string.
pub fn homotopy_failures(g: &GhostAlgebra, samples: usize, seed: u64) -> Result<Vec<String>, CliError> {
    let t = &g.table;
    let mut rng = random::rng(seed);
    let mut out = Vec::new();
    let err = CliError::analysis;
    for _ in 0..samples {
        let x = g.random_element(&mut rng, 4, 4);
        let lhs = &g.hodge_apply(&g.brst_apply(&x).map_err(err)?).map_err(err)?
            + &g.brst_apply(&g.hodge_apply(&x).map_err(err)?).map_err(err)?;
        let n = g.number_operator(&x);
        if lhs != n {
            out.push(format!("{{Q_H, Q}}({}) = {} but N = {}", x.render(t), lhs.render(t), n.render(t)));
        }
        let exact = g.brst_apply(&g.random_element(&mut rng, 3, 3)).map_err(err)?;
        let base = g.brst_apply(&g.number_part(&g.random_element(&mut rng, 3, 3), 0)).map_err(err)?;
        let y = &exact + &base;
        match g.decompose_closed(&y) {
            Ok((u0, ut)) => {
                let back = &u0 + &g.brst_apply(&ut).map_err(err)?;
                if back != y || !g.brst_apply(&u0).map_err(err)?.is_zero() {
                    out.push(format!("decomposition of {} does not round-trip", y.render(t)));
                }
            }
            Err(e) => out.push(format!("{}: {e}", y.render(t))),
        }
    }
    Ok(out)
}

pub fn brst(file: ModelFile, check: BrstCheck, samples: usize, seed: u64, opts: &Options) -> Result<String, CliError> {
    let spec = file.lie_algebra()?.ok_or_else(|| CliError::Input("model has no brst section".into()))?;
    let dimension = spec.dim();
    let g = GhostAlgebra::new(spec).map_err(CliError::analysis)?;
    let (name, generators, counterexamples) = match check {
        BrstCheck::Nilpotency => {
            let r = g.nilpotency_check(samples, seed).map_err(CliError::analysis)?;
            let mut c = r.generator_defects.clone();
            c.extend(r.sample_defects.iter().cloned());
            ("nilpotency", r.generators, c)
        }
        BrstCheck::Homotopy => {
            let f = homotopy_failures(&g, samples, seed)?;
            ("homotopy", g.generators().len(), f.into_iter().map(|s| (s, String::new())).collect())
        }
    };
    if let Some((x, y)) = counterexamples.first() {
        let witness = if y.is_empty() { x.clone() } else { format!("Q^2({x}) = {y}") };
        return Err(CliError::Analysis(format!("{name} check failed; first counterexample: {witness}")));
    }
    Ok(match opts.format {
        Format::Text => format!("{name}: pass ({generators} generators, {samples} samples)\n"),
        Format::Json => json::to_string(&BrstCheckJson {
            schema_version: SCHEMA_VERSION,
            check: name,
            dimension,
            generators,
            samples,
            passed: true,
            counterexamples,
        }),
    })
}

/// Parses `e` against the session table (used by tests and the acceptance harness).
pub fn parse_in(s: &Session, e: &str) -> Result<GradedExpr, CliError> {
    model::expr(e, s.table())
}
