//! Floating-point Grassmann numbers and compiled expression evaluation.

use crate::superalgebra::{monomial_product_sign, rational_to_f64, GrassmannNumber};
use crate::symalg::{GradedExpr, VarKind, VariableTable};

use super::DynamicsError;

/// Grassmann number with `f64` components indexed by generator mask.
#[derive(Clone, Debug, PartialEq)]
pub struct NumGrassmann(pub Vec<f64>);

impl NumGrassmann {
    pub fn zero(g: u32) -> Self {
        NumGrassmann(vec![0.0; 1usize << g])
    }

    pub fn real(g: u32, x: f64) -> Self {
        let mut v = Self::zero(g);
        v.0[0] = x;
        v
    }

    pub fn from_exact(x: &GrassmannNumber, g: u32) -> Self {
        let mut v = Self::zero(g);
        for (m, c) in x.widened(g).terms() {
            v.0[m as usize] = rational_to_f64(c);
        }
        v
    }

    pub fn body(&self) -> f64 {
        self.0[0]
    }

    /// Largest absolute component.
    pub fn norm(&self) -> f64 {
        self.0.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.0.len()];
        for (a, x) in self.0.iter().enumerate() {
            if *x == 0.0 {
                continue;
            }
            for (b, y) in other.0.iter().enumerate() {
                if *y == 0.0 {
                    continue;
                }
                if let Some(neg) = monomial_product_sign(a as u64, b as u64) {
                    let v = x * y;
                    out[a | b] += if neg { -v } else { v };
                }
            }
        }
        NumGrassmann(out)
    }

    pub fn add_scaled(&mut self, other: &Self, k: f64) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        NumGrassmann(self.0.iter().map(|x| k * x).collect())
    }

    /// `e^{body} Σ soulᵏ/k!`, exact because the soul is nilpotent.
    pub fn exp(&self) -> Self {
        let g = self.0.len().trailing_zeros();
        let mut soul = self.clone();
        soul.0[0] = 0.0;
        let mut acc = Self::real(g, 1.0);
        let mut power = Self::real(g, 1.0);
        for k in 1..=g.max(1) {
            power = power.mul(&soul).scaled(1.0 / k as f64);
            if power.0.iter().all(|x| *x == 0.0) {
                break;
            }
            acc.add_scaled(&power, 1.0);
        }
        acc.scaled(self.0[0].exp())
    }
}

#[derive(Clone, Debug)]
struct CTerm {
    coef: NumGrassmann,
    even: Vec<(usize, u32)>,
    odd: Vec<usize>,
    exp: Vec<(usize, f64)>,
}

/// An expression flattened for repeated numeric evaluation. Values are looked up by
/// variable index; phase variables, time, auxiliaries and Grassmann constants may occur.
#[derive(Clone, Debug)]
pub struct Compiled {
    g: u32,
    terms: Vec<CTerm>,
}

fn evaluable(kind: VarKind) -> bool {
    matches!(
        kind,
        VarKind::Position | VarKind::Momentum | VarKind::Time | VarKind::Auxiliary | VarKind::GrassmannConst(_)
    )
}

impl Compiled {
    pub fn new(e: &GradedExpr, table: &VariableTable) -> Result<Self, DynamicsError> {
        let g = table.generators();
        if let Some(v) = e.vars().into_iter().find(|v| !evaluable(table.kind(*v))) {
            return Err(DynamicsError::Unevaluable(format!(
                "{} contains {}, which has no numeric value",
                e.render(table),
                table.name(v)
            )));
        }
        let terms = e
            .terms()
            .map(|((m, form), c)| CTerm {
                coef: NumGrassmann::from_exact(c, g),
                even: m.even.iter().map(|(v, n)| (v.index(), *n)).collect(),
                odd: m.odd.iter().map(|v| v.index()).collect(),
                exp: form.0.iter().map(|(v, r)| (v.index(), rational_to_f64(r))).collect(),
            })
            .collect();
        Ok(Compiled { g, terms })
    }

    pub fn eval(&self, values: &[NumGrassmann]) -> NumGrassmann {
        let mut acc = NumGrassmann::zero(self.g);
        for t in &self.terms {
            let mut v = t.coef.clone();
            for &(i, n) in &t.even {
                for _ in 0..n {
                    v = v.mul(&values[i]);
                }
            }
            for &i in &t.odd {
                v = v.mul(&values[i]);
            }
            if !t.exp.is_empty() {
                let mut arg = NumGrassmann::zero(self.g);
                for &(i, r) in &t.exp {
                    arg.add_scaled(&values[i], r);
                }
                v = v.mul(&arg.exp());
            }
            acc.add_scaled(&v, 1.0);
        }
        acc
    }

    /// Body-only fast path for expressions whose value at real points is real.
    pub fn eval_body(&self, values: &[NumGrassmann]) -> f64 {
        if self.g == 0 {
            let mut acc = 0.0;
            for t in &self.terms {
                let mut v = t.coef.0[0];
                for &(i, n) in &t.even {
                    v *= values[i].0[0].powi(n as i32);
                }
                for &i in &t.odd {
                    v *= values[i].0[0];
                }
                if !t.exp.is_empty() {
                    v *= t.exp.iter().map(|&(i, r)| r * values[i].0[0]).sum::<f64>().exp();
                }
                acc += v;
            }
            acc
        } else {
            self.eval(values).body()
        }
    }
}

/// Initial numeric values for every symbol of `table`: zero, except Grassmann constants.
pub fn base_values(table: &VariableTable) -> Vec<NumGrassmann> {
    let g = table.generators();
    let mut vals = vec![NumGrassmann::zero(g); table.len()];
    for i in 1..=g as usize {
        if let Some(z) = table.zeta(i) {
            vals[z.index()].0[1usize << (i - 1)] = 1.0;
        }
    }
    vals
}

