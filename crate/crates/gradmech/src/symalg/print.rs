use num_traits::{One, Signed};

use crate::superalgebra::{mask_to_subset, GrassmannNumber, Rational};

use super::expr::{ExpForm, GradedExpr, Monomial};
use super::table::VariableTable;

fn rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn zeta_word(mask: u64) -> String {
    mask_to_subset(mask).iter().map(|i| format!("zeta{i}")).collect::<Vec<_>>().join("*")
}

/// Grammar-conforming rendering of a Grassmann number.
pub fn render_grassmann(c: &GrassmannNumber) -> String {
    let mut s = String::new();
    for (k, (mask, q)) in c.terms().enumerate() {
        let neg = q.is_negative();
        let a = q.abs();
        if k == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if mask == 0 {
            s.push_str(&rational(&a));
        } else if a.is_one() {
            s.push_str(&zeta_word(mask));
        } else {
            s.push_str(&format!("{}*{}", rational(&a), zeta_word(mask)));
        }
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

fn form(f: &ExpForm, table: &VariableTable) -> String {
    let mut s = String::new();
    for (k, (v, a)) in f.0.iter().enumerate() {
        let neg = a.is_negative();
        let a = a.abs();
        if k == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        if a.is_one() {
            s.push_str(table.name(*v));
        } else {
            s.push_str(&format!("{}*{}", rational(&a), table.name(*v)));
        }
    }
    s
}

fn factors(m: &Monomial, f: &ExpForm, table: &VariableTable) -> Vec<String> {
    let mut out = Vec::new();
    if !f.is_trivial() {
        out.push(format!("exp({})", form(f, table)));
    }
    for (v, k) in &m.even {
        if *k == 1 {
            out.push(table.name(*v).to_string());
        } else {
            out.push(format!("{}^{}", table.name(*v), k));
        }
    }
    for v in &m.odd {
        out.push(table.name(*v).to_string());
    }
    out
}

/// Deterministic, re-parseable text of an expression.
pub fn render(e: &GradedExpr, table: &VariableTable) -> String {
    let mut s = String::new();
    for (k, ((m, f), c)) in e.terms().enumerate() {
        let fs = factors(m, f, table);
        // (sign, coefficient text without sign)
        let (neg, coef) = if c.is_scalar() {
            let b = c.body();
            (b.is_negative(), if b.abs().is_one() && !fs.is_empty() { String::new() } else { rational(&b.abs()) })
        } else if c.term_count() == 1 {
            let (mask, q) = c.terms().next().expect("one term");
            let word = zeta_word(mask);
            let a = q.abs();
            (q.is_negative(), if a.is_one() { word } else { format!("{}*{}", rational(&a), word) })
        } else {
            (false, format!("({})", render_grassmann(c)))
        };
        if k == 0 {
            if neg {
                s.push('-');
            }
        } else {
            s.push_str(if neg { " - " } else { " + " });
        }
        let mut parts = Vec::new();
        if !coef.is_empty() {
            parts.push(coef);
        }
        parts.extend(fs);
        s.push_str(&parts.join("*"));
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

impl GradedExpr {
    pub fn render(&self, table: &VariableTable) -> String {
        render(self, table)
    }
}
