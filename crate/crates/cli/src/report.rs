//! Experiment records and grid dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ncpain_core::{CMat, GridFunction, MaskedGrid, NcRing};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    Truncated,
}

/// Sup and mean of entry norms over the unmasked samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub sup_norm: Option<f64>,
    pub mean_norm: Option<f64>,
    pub masked_fraction: f64,
    pub samples: usize,
}

impl ResidualSummary {
    pub fn from_norms(norms: impl IntoIterator<Item = Option<f64>>) -> Self {
        let (mut sup, mut sum, mut n, mut masked) = (0.0f64, 0.0, 0usize, 0usize);
        for x in norms {
            match x {
                Some(x) => {
                    sup = sup.max(x);
                    sum += x;
                    n += 1;
                }
                None => masked += 1,
            }
        }
        let total = n + masked;
        ResidualSummary {
            sup_norm: (n > 0).then_some(sup),
            mean_norm: (n > 0).then(|| sum / n as f64),
            masked_fraction: if total == 0 { 0.0 } else { masked as f64 / total as f64 },
            samples: n,
        }
    }

    pub fn of_grid<R: NcRing>(g: &GridFunction<R>) -> Self {
        Self::from_norms(g.values().iter().map(|v| Some(v.norm())))
    }

    pub fn of_masked<R: NcRing>(g: &MaskedGrid<R>) -> Self {
        Self::from_norms(g.values().iter().map(|v| v.as_ref().map(NcRing::norm)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub status: Status,
    pub conventions: BTreeMap<String, String>,
    pub parameters: BTreeMap<String, Value>,
    pub residuals: BTreeMap<String, ResidualSummary>,
    pub results: BTreeMap<String, Value>,
    pub duration_ms: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str) -> Self {
        let conventions = [
            ("indices", "one-based on the command line"),
            (
                "quasideterminant",
                "|A|_ij = ((A^-1)_ji)^-1 = a_ij - r_i (A^ij)^-1 c_j",
            ),
        ];
        ExperimentReport {
            experiment: experiment.to_string(),
            version: VERSION.to_string(),
            status: Status::Ok,
            conventions: conventions.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            parameters: BTreeMap::new(),
            residuals: BTreeMap::new(),
            results: BTreeMap::new(),
            duration_ms: 0.0,
        }
    }

    pub fn convention(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.conventions.insert(key.to_string(), value.into());
        self
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.parameters.insert(key.to_string(), to_value(value));
        self
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.results.insert(key.to_string(), to_value(value));
        self
    }

    pub fn residual(&mut self, key: &str, summary: ResidualSummary) -> &mut Self {
        self.residuals.insert(key.to_string(), summary);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// `[[re, im], ..]` rows of a matrix value.
pub fn matrix_value(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    let d = m.dim();
    (0..d)
        .map(|i| (0..d).map(|j| [m.get(i, j).re, m.get(i, j).im]).collect())
        .collect()
}

/// CSV with header `z,entry_11_re,entry_11_im,..`, one row per grid point,
/// `NaN` in every entry column of masked rows.
pub fn grid_csv(d: usize, rows: impl IntoIterator<Item = (f64, Option<CMat>)>) -> String {
    let mut out = String::from("z");
    for i in 1..=d {
        for j in 1..=d {
            let _ = write!(out, ",entry_{i}{j}_re,entry_{i}{j}_im");
        }
    }
    out.push('\n');
    for (z, value) in rows {
        let _ = write!(out, "{z}");
        match value {
            Some(m) => {
                for c in m.entries() {
                    let _ = write!(out, ",{},{}", c.re, c.im);
                }
            }
            None => out.push_str(&",NaN".repeat(2 * d * d)),
        }
        out.push('\n');
    }
    out
}

pub fn masked_csv(g: &MaskedGrid<CMat>, d: usize) -> String {
    let spec = g.spec();
    grid_csv(d, g.values().iter().enumerate().map(|(k, v)| (spec.z(k), v.clone())))
}

pub fn dense_csv(g: &GridFunction<CMat>, d: usize) -> String {
    grid_csv(d, g.iter().map(|(z, v)| (z, Some(v.clone()))))
}
