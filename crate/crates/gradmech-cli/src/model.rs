//! Model files: JSON schema, validation and conversion into library objects.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use gradmech::brst::LieAlgebraSpec;
use gradmech::constraints::{HamiltonianModel, LagrangianModel};
use gradmech::dynamics::{MultiplierSchedule, NumGrassmann, PiecewisePolynomial};
use gradmech::superalgebra::{Parity, Rational};
use gradmech::symalg::{parse_expr, GradedExpr, VariableTable};
use gradmech::symmetry::SymmetryCandidate;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub grassmann_generators: u32,
    #[serde(default)]
    pub variables: Vec<VariableDecl>,
    #[serde(default)]
    pub lagrangian: Option<LagrangianDecl>,
    #[serde(default)]
    pub hamiltonian: Option<HamiltonianDecl>,
    #[serde(default)]
    pub symmetries: Vec<SymmetryDecl>,
    #[serde(default)]
    pub manual_constraints: Vec<String>,
    /// Candidate charges tested with the symmetry-generator criterion.
    #[serde(default)]
    pub generator_candidates: Vec<String>,
    #[serde(default)]
    pub brst: Option<BrstDecl>,
    #[serde(default)]
    pub dynamics: Option<DynamicsDecl>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDecl {
    pub name: String,
    pub parity: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianDecl {
    pub expr: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianDecl {
    pub expr: String,
    #[serde(default)]
    pub primary_constraints: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryDecl {
    pub name: String,
    pub delta_q: BTreeMap<String, String>,
    #[serde(rename = "delta_K", default)]
    pub delta_k: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureConstant {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub value: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrstDecl {
    pub dimension: usize,
    /// Nonzero `C_ab^c` with `a < b` or in any order; the antisymmetric partner is implied.
    #[serde(default)]
    pub structure_constants: Vec<StructureConstant>,
    /// Skip the Jacobi check (only for demonstrating a broken algebra).
    #[serde(default)]
    pub unchecked: bool,
}

/// A real number or a Grassmann constant written as an expression in `zeta1..`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Expr(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleDecl {
    Constant(f64),
    Piecewise { #[serde(default)] breaks: Vec<f64>, pieces: Vec<Vec<f64>> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareDecl {
    /// Reference schedules; defaults to the dynamics section's own.
    #[serde(default)]
    pub base: Option<BTreeMap<String, ScheduleDecl>>,
    pub schedules: BTreeMap<String, ScheduleDecl>,
    pub observables: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsDecl {
    #[serde(default)]
    pub x0: BTreeMap<String, Value>,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default)]
    pub schedules: BTreeMap<String, ScheduleDecl>,
    #[serde(default = "default_generator")]
    pub generator: String,
    #[serde(default = "default_bracket")]
    pub bracket: String,
    #[serde(default)]
    pub compare: Option<CompareDecl>,
}

fn default_scheme() -> String {
    "rk4".into()
}
fn default_generator() -> String {
    "total".into()
}
fn default_bracket() -> String {
    "poisson".into()
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

pub fn parse_parity(s: &str) -> Result<Parity, CliError> {
    match s {
        "even" | "e" | "0" => Ok(Parity::Even),
        "odd" | "o" | "1" => Ok(Parity::Odd),
        _ => Err(input(format!("parity must be \"even\" or \"odd\", got {s:?}"))),
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, CliError> {
    s.trim().parse::<Rational>().map_err(|_| input(format!("not a rational number: {s:?}")))
}

/// The mechanical part of a model file.
#[derive(Clone, Debug)]
pub enum Mechanics {
    Lagrangian(LagrangianModel),
    Hamiltonian(HamiltonianModel),
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: ModelFile = serde_json::from_str(text).map_err(|e| input(format!("model file: {e}")))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(input(format!("unsupported schema_version {}", m.schema_version)));
        }
        if m.lagrangian.is_some() && m.hamiltonian.is_some() {
            return Err(input("model declares both a lagrangian and a hamiltonian"));
        }
        if m.lagrangian.is_none() && m.hamiltonian.is_none() && m.brst.is_none() {
            return Err(input("model declares neither a lagrangian, a hamiltonian nor a brst section"));
        }
        Ok(m)
    }

    pub fn table(&self) -> Result<VariableTable, CliError> {
        let mut t = VariableTable::new(self.grassmann_generators);
        for v in &self.variables {
            t.add_canonical_pair(&v.name, parse_parity(&v.parity)?)
                .map_err(|e| input(format!("variable {}: {e}", v.name)))?;
        }
        Ok(t)
    }

    pub fn mechanics(&self) -> Result<Option<Mechanics>, CliError> {
        let t = self.table()?;
        if let Some(l) = &self.lagrangian {
            let l = expr(&l.expr, &t)?;
            let m = LagrangianModel::new(t, l).map_err(|e| input(e.to_string()))?;
            return Ok(Some(Mechanics::Lagrangian(m)));
        }
        if let Some(h) = &self.hamiltonian {
            let e = expr(&h.expr, &t)?;
            let prim = h.primary_constraints.iter().map(|s| expr(s, &t)).collect::<Result<Vec<_>, _>>()?;
            let m = HamiltonianModel::new(t, e, prim).map_err(|e| input(e.to_string()))?;
            return Ok(Some(Mechanics::Hamiltonian(m)));
        }
        Ok(None)
    }

    pub fn symmetry_candidates(&self, table: &VariableTable) -> Result<Vec<(String, SymmetryCandidate)>, CliError> {
        self.symmetries
            .iter()
            .map(|s| {
                let delta_q = s
                    .delta_q
                    .iter()
                    .map(|(q, e)| {
                        let v = table.require(q).map_err(|e| input(format!("symmetry {}: {e}", s.name)))?;
                        Ok((v, expr(e, table)?))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                let delta_k = match &s.delta_k {
                    Some(k) => expr(k, table)?,
                    None => GradedExpr::zero(table.generators()),
                };
                Ok((s.name.clone(), SymmetryCandidate { delta_q, delta_k }))
            })
            .collect()
    }

    pub fn lie_algebra(&self) -> Result<Option<LieAlgebraSpec>, CliError> {
        let Some(b) = &self.brst else { return Ok(None) };
        let n = b.dimension;
        let mut c = vec![vec![vec![Rational::from_integer(0.into()); n]; n]; n];
        for sc in &b.structure_constants {
            if [sc.a, sc.b, sc.c].iter().any(|i| *i == 0 || *i > n) {
                return Err(input(format!("structure constant index out of range: C_{}{}^{}", sc.a, sc.b, sc.c)));
            }
            let v = parse_rational(&sc.value)?;
            c[sc.a - 1][sc.b - 1][sc.c - 1] = v.clone();
            c[sc.b - 1][sc.a - 1][sc.c - 1] = -v;
        }
        let spec = if b.unchecked { LieAlgebraSpec::new_unchecked(c) } else { LieAlgebraSpec::new(c) };
        spec.map(Some).map_err(|e| input(e.to_string()))
    }
}

pub fn expr(s: &str, t: &VariableTable) -> Result<GradedExpr, CliError> {
    parse_expr(s, t).map_err(|e| input(format!("{s:?}: {e}")))
}

pub fn schedule(decls: &BTreeMap<String, ScheduleDecl>, t: &VariableTable) -> Result<MultiplierSchedule, CliError> {
    let mut s = MultiplierSchedule::new();
    for (name, d) in decls {
        let v = t.require(name).map_err(|e| input(format!("schedule: {e}")))?;
        let p = match d {
            ScheduleDecl::Constant(c) => PiecewisePolynomial::constant(*c),
            ScheduleDecl::Piecewise { breaks, pieces } => {
                PiecewisePolynomial::new(breaks.clone(), pieces.clone()).map_err(|e| input(format!("schedule {name}: {e}")))?
            }
        };
        s = s.with(v, p);
    }
    Ok(s)
}

pub fn initial_state(
    decls: &BTreeMap<String, Value>,
    t: &VariableTable,
) -> Result<BTreeMap<gradmech::symalg::VarId, NumGrassmann>, CliError> {
    let g = t.generators();
    decls
        .iter()
        .map(|(name, v)| {
            let id = t.require(name).map_err(|e| input(format!("x0: {e}")))?;
            let val = match v {
                Value::Real(x) => NumGrassmann::real(g, *x),
                Value::Expr(s) => {
                    let e = expr(s, t)?;
                    let c = e.as_constant().ok_or_else(|| input(format!("x0.{name}: {s:?} is not a constant")))?;
                    NumGrassmann::from_exact(&c, g)
                }
            };
            Ok((id, val))
        })
        .collect()
}
