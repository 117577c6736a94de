use std::collections::BTreeMap;

use crate::superalgebra::Parity;

use super::SymError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Position,
    Momentum,
    /// `n`-th time derivative of a position (`n ≥ 1`).
    Jet(u32),
    Time,
    Ghost,
    Antighost,
    Auxiliary,
    /// One of the `ζ` generators; only ever appears inside coefficients.
    GrassmannConst(usize),
}

#[derive(Clone, Debug)]
pub struct Variable {
    pub name: String,
    pub parity: Parity,
    pub kind: VarKind,
    pub ghost_number: i32,
    /// Position whose jet this is (for jets and for the position itself, order 0).
    pub jet_base: Option<VarId>,
    /// Variable standing for the time derivative of this one.
    pub derivative: Option<VarId>,
    /// Momentum of a position, or position of a momentum.
    pub partner: Option<VarId>,
}

/// Ordered variable declarations; declaration order is the monomial order.
#[derive(Clone, Debug)]
pub struct VariableTable {
    generators: u32,
    max_jet_order: u32,
    vars: Vec<Variable>,
    by_name: BTreeMap<String, VarId>,
    time: VarId,
}

pub const DEFAULT_MAX_JET_ORDER: u32 = 4;

/// `q1 → p1`, `q_rest → p_rest`, otherwise `x → p_x`.
pub fn momentum_name(position: &str) -> String {
    match position.strip_prefix('q') {
        Some(rest) if !rest.is_empty() && rest.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '_') => {
            format!("p{rest}")
        }
        _ => format!("p_{position}"),
    }
}

pub fn jet_name(base: &str, order: u32) -> String {
    match order {
        0 => base.to_string(),
        1 => format!("{base}_dot"),
        2 => format!("{base}_ddot"),
        n => format!("{base}_d{n}"),
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl VariableTable {
    /// Table with the time variable `t` and the constants `zeta1..zetaN`.
    pub fn new(generators: u32) -> Self {
        Self::with_max_jet_order(generators, DEFAULT_MAX_JET_ORDER)
    }

    pub fn with_max_jet_order(generators: u32, max_jet_order: u32) -> Self {
        let mut t = VariableTable {
            generators,
            max_jet_order,
            vars: Vec::new(),
            by_name: BTreeMap::new(),
            time: VarId(0),
        };
        t.time = t.push("t", Parity::Even, VarKind::Time, 0).expect("fresh table");
        for i in 1..=generators as usize {
            t.push(&format!("zeta{i}"), Parity::Odd, VarKind::GrassmannConst(i), 0).expect("fresh table");
        }
        t
    }

    fn push(&mut self, name: &str, parity: Parity, kind: VarKind, ghost_number: i32) -> Result<VarId, SymError> {
        if !is_identifier(name) || name == "exp" {
            return Err(SymError::BadName(name.to_string()));
        }
        if self.by_name.contains_key(name) {
            return Err(SymError::DuplicateName(name.to_string()));
        }
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Variable {
            name: name.to_string(),
            parity,
            kind,
            ghost_number,
            jet_base: None,
            derivative: None,
            partner: None,
        });
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    /// Adds a bare variable with no partner or jets.
    pub fn add(&mut self, name: &str, parity: Parity, kind: VarKind, ghost_number: i32) -> Result<VarId, SymError> {
        self.push(name, parity, kind, ghost_number)
    }

    /// Adds a position with its jet tower up to the maximal order (no momentum).
    pub fn add_position(&mut self, name: &str, parity: Parity) -> Result<VarId, SymError> {
        let q = self.push(name, parity, VarKind::Position, 0)?;
        self.vars[q.index()].jet_base = Some(q);
        let mut prev = q;
        for n in 1..=self.max_jet_order {
            let j = self.push(&jet_name(name, n), parity, VarKind::Jet(n), 0)?;
            self.vars[j.index()].jet_base = Some(q);
            self.vars[prev.index()].derivative = Some(j);
            prev = j;
        }
        Ok(q)
    }

    /// Adds a position, its jets and its momentum; returns `(q, p)`.
    pub fn add_canonical_pair(&mut self, name: &str, parity: Parity) -> Result<(VarId, VarId), SymError> {
        let q = self.add_position(name, parity)?;
        let p = self.push(&momentum_name(name), parity, VarKind::Momentum, 0)?;
        self.vars[q.index()].partner = Some(p);
        self.vars[p.index()].partner = Some(q);
        Ok((q, p))
    }

    /// Adds an auxiliary symbol together with `<name>_dot`, so that explicit
    /// time derivatives of expressions carrying it stay representable.
    pub fn add_auxiliary(&mut self, name: &str, parity: Parity) -> Result<VarId, SymError> {
        let u = self.push(name, parity, VarKind::Auxiliary, 0)?;
        let d = self.push(&format!("{name}_dot"), parity, VarKind::Auxiliary, 0)?;
        self.vars[u.index()].derivative = Some(d);
        Ok(u)
    }

    pub fn generators(&self) -> u32 {
        self.generators
    }

    pub fn max_jet_order(&self) -> u32 {
        self.max_jet_order
    }

    pub fn time(&self) -> VarId {
        self.time
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn get(&self, id: VarId) -> &Variable {
        &self.vars[id.index()]
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.vars[id.index()].name
    }

    pub fn parity(&self, id: VarId) -> Parity {
        self.vars[id.index()].parity
    }

    pub fn kind(&self, id: VarId) -> VarKind {
        self.vars[id.index()].kind
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<VarId, SymError> {
        self.lookup(name).ok_or_else(|| SymError::UnknownIdentifier { name: name.to_string(), pos: 0 })
    }

    pub fn ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len() as u32).map(VarId)
    }

    pub fn positions(&self) -> Vec<VarId> {
        self.ids().filter(|&v| self.kind(v) == VarKind::Position).collect()
    }

    pub fn momenta(&self) -> Vec<VarId> {
        self.ids().filter(|&v| self.kind(v) == VarKind::Momentum).collect()
    }

    /// Positions that carry a momentum, in declaration order.
    pub fn canonical_pairs(&self) -> Vec<(VarId, VarId)> {
        self.positions().into_iter().filter_map(|q| self.partner(q).map(|p| (q, p))).collect()
    }

    pub fn partner(&self, id: VarId) -> Option<VarId> {
        self.vars[id.index()].partner
    }

    pub fn derivative(&self, id: VarId) -> Option<VarId> {
        self.vars[id.index()].derivative
    }

    /// `(base position, order)` for positions and jets.
    pub fn jet_info(&self, id: VarId) -> Option<(VarId, u32)> {
        let v = &self.vars[id.index()];
        match (v.kind, v.jet_base) {
            (VarKind::Position, Some(b)) => Some((b, 0)),
            (VarKind::Jet(n), Some(b)) => Some((b, n)),
            _ => None,
        }
    }

    /// `n`-th jet of a position (`n = 0` is the position itself).
    pub fn jet(&self, base: VarId, n: u32) -> Result<VarId, SymError> {
        let mut v = base;
        for _ in 0..n {
            v = self
                .derivative(v)
                .ok_or_else(|| SymError::JetOverflow(format!("{} beyond order {}", self.name(base), self.max_jet_order)))?;
        }
        Ok(v)
    }

    pub fn velocity(&self, base: VarId) -> Result<VarId, SymError> {
        self.jet(base, 1)
    }

    pub fn zeta(&self, i: usize) -> Option<VarId> {
        self.lookup(&format!("zeta{i}"))
    }
}
