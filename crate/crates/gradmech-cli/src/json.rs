//! Serialization of exact values: rationals as `"p/q"`, Grassmann numbers as
//! `{subset: coefficient}` maps keyed by `"1,2"` (`""` for the body).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use gradmech::superalgebra::{mask_to_subset, GrassmannNumber, Parity, Rational, SuperMatrix};

pub fn rational(q: &Rational) -> String {
    q.to_string()
}

pub fn grassmann(c: &GrassmannNumber) -> BTreeMap<String, String> {
    c.terms()
        .map(|(m, q)| {
            let key = mask_to_subset(m).iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
            (key, rational(q))
        })
        .collect()
}

pub fn parity(p: Parity) -> &'static str {
    match p {
        Parity::Even => "even",
        Parity::Odd => "odd",
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixJson {
    pub row_parities: Vec<String>,
    pub col_parities: Vec<String>,
    pub entries: Vec<Vec<BTreeMap<String, String>>>,
    /// Human-readable rendering of the same entries.
    pub rendered: Vec<Vec<String>>,
}

pub fn matrix(m: &SuperMatrix) -> MatrixJson {
    MatrixJson {
        row_parities: m.row_parities().iter().map(|p| parity(*p).to_string()).collect(),
        col_parities: m.col_parities().iter().map(|p| parity(*p).to_string()).collect(),
        entries: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| grassmann(m.entry(i, j))).collect()).collect(),
        rendered: (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m.entry(i, j).render()).collect()).collect(),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_string<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}
