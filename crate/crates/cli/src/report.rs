//! Report assembly and the json/text writers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use pqc_core::residual::Residual;
use serde::{Deserialize, Serialize};

use crate::spec::{Term, VerificationSpec};

/// Decimal with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub tag: String,
    pub points: usize,
    pub max_residual: String,
    pub scale: String,
    pub relative: String,
    pub tolerance: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub entries: Vec<Entry>,
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn entry(&self, id: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub n: usize,
    pub seed: u64,
    pub sample_count: usize,
    pub point_box: [String; 2],
    pub suites: Vec<String>,
    pub h: Vec<Term>,
    pub tolerance_overrides: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub environment: Environment,
    pub warnings: Vec<String>,
    pub suites: Vec<SuiteReport>,
    pub pass: bool,
}

impl Report {
    pub fn new(spec: &VerificationSpec, suites: Vec<SuiteReport>) -> Self {
        let pass = suites.iter().all(SuiteReport::pass);
        Self {
            environment: Environment {
                n: spec.n,
                seed: spec.seed,
                sample_count: spec.sample_count,
                point_box: [fmt17(spec.point_box.0), fmt17(spec.point_box.1)],
                suites: spec.suites.iter().map(|s| s.name().to_string()).collect(),
                h: spec.h.clone(),
                tolerance_overrides: spec.tolerances.iter().map(|(k, v)| (k.clone(), fmt17(*v))).collect(),
            },
            warnings: spec.warnings.clone(),
            suites,
            pass,
        }
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.name == name)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Summary table with failing entries first.
    pub fn to_text(&self) -> String {
        let env = &self.environment;
        let mut out = String::new();
        let _ = writeln!(out, "pqc verification report");
        let _ = writeln!(
            out,
            "n = {}  seed = {}  samples = {}  box = [{}, {}]  suites = {}",
            env.n,
            env.seed,
            env.sample_count,
            env.point_box[0],
            env.point_box[1],
            env.suites.join(",")
        );
        for (k, v) in &env.tolerance_overrides {
            let _ = writeln!(out, "tolerance override {k} = {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        let mut rows: Vec<(&str, &Entry)> = self
            .suites
            .iter()
            .flat_map(|s| s.entries.iter().map(move |e| (s.name.as_str(), e)))
            .collect();
        rows.sort_by_key(|(_, e)| e.pass);
        let _ = writeln!(out, "{:<6} {:<11} {:<32} {:>6} {:>24} {:>24}  {}", "status", "suite", "id", "points", "relative", "tolerance", "identity");
        for (suite, e) in rows {
            let _ = writeln!(
                out,
                "{:<6} {:<11} {:<32} {:>6} {:>24} {:>24}  {}",
                if e.pass { "PASS" } else { "FAIL" },
                suite,
                e.id,
                e.points,
                e.relative,
                e.tolerance,
                e.tag
            );
        }
        for s in &self.suites {
            for (k, v) in &s.notes {
                let _ = writeln!(out, "note {}.{k}: {v}", s.name);
            }
        }
        let _ = writeln!(out, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    }
}

pub fn write_report(report: &Report, path: impl AsRef<Path>, format: Format) -> std::io::Result<()> {
    std::fs::write(path, render(report, format))
}

/// Worst residual per identity across sample points, in first-seen order.
#[derive(Debug, Default)]
pub struct Accumulator {
    order: Vec<String>,
    worst: BTreeMap<String, (Residual, usize)>,
}

impl Accumulator {
    pub fn add(&mut self, r: &Residual) {
        match self.worst.get_mut(&r.id) {
            Some((w, count)) => {
                w.merge(r);
                *count += 1;
            }
            None => {
                self.order.push(r.id.clone());
                self.worst.insert(r.id.clone(), (r.clone(), 1));
            }
        }
    }

    pub fn extend<'a>(&mut self, rs: impl IntoIterator<Item = &'a Residual>) {
        for r in rs {
            self.add(r);
        }
    }

    pub fn finish(self, name: &str, spec: &VerificationSpec, notes: BTreeMap<String, String>) -> SuiteReport {
        let entries = self
            .order
            .iter()
            .map(|id| {
                let (r, points) = &self.worst[id];
                let tol = spec.tolerance(id);
                Entry {
                    id: id.clone(),
                    tag: r.tag.clone(),
                    points: *points,
                    max_residual: fmt17(r.max_residual),
                    scale: fmt17(r.scale),
                    relative: fmt17(r.relative()),
                    tolerance: fmt17(tol),
                    pass: r.passes(tol),
                }
            })
            .collect();
        SuiteReport {
            name: name.to_string(),
            entries,
            notes,
        }
    }
}
