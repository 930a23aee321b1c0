//! Verification spec files (TOML, or JSON with the same schema).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use pqc_core::checks::default_tolerance;
use pqc_core::jets::{coordinate_count, coordinate_index, Polynomial};
use serde::de::{MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Algebra,
    Heisenberg,
    Conformal,
    Cayley,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Algebra, Suite::Heisenberg, Suite::Conformal, Suite::Cayley];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Algebra => "algebra",
            Suite::Heisenberg => "heisenberg",
            Suite::Conformal => "conformal",
            Suite::Cayley => "cayley",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{format} parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub format: &'static str,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ValidationError {
    pub violations: Vec<String>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid spec: {}", self.violations.join("; "))
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read spec: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// One monomial of `h`: `coeff · Π u^power`. Exponents can be given by
/// coordinate name (`powers`) or as a full chart-ordered vector (`exponents`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub powers: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<u32>>,
}

/// Tolerance overrides in file order; accepts a map or a list of `{id, value}`.
#[derive(Debug, Clone, Default, PartialEq)]
struct TolEntries(Vec<(String, f64)>);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TolEntry {
    id: String,
    value: f64,
}

impl<'de> Deserialize<'de> for TolEntries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TolEntries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map of identity id to tolerance, or a list of {id, value}")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<TolEntries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = m.next_entry::<String, f64>()? {
                    out.push((k, v));
                }
                Ok(TolEntries(out))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut s: A) -> Result<TolEntries, A::Error> {
                let mut out = Vec::new();
                while let Some(e) = s.next_element::<TolEntry>()? {
                    out.push((e.id, e.value));
                }
                Ok(TolEntries(out))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    n: i64,
    #[serde(default)]
    suites: Vec<Suite>,
    #[serde(default)]
    h: Vec<Term>,
    sample_count: Option<i64>,
    seed: Option<u64>,
    #[serde(default)]
    tolerances: TolEntries,
    point_box: Option<[f64; 2]>,
}

/// A validated spec with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationSpec {
    pub n: usize,
    pub suites: Vec<Suite>,
    pub h: Vec<Term>,
    pub sample_count: usize,
    pub seed: u64,
    /// Overrides only; everything else uses the built-in defaults.
    pub tolerances: BTreeMap<String, f64>,
    pub point_box: (f64, f64),
    pub warnings: Vec<String>,
}

impl VerificationSpec {
    pub const DEFAULT_SAMPLE_COUNT: usize = 5;
    pub const DEFAULT_SEED: u64 = 42;
    pub const DEFAULT_BOX: (f64, f64) = (-1.0, 1.0);

    pub fn minimal(n: usize, suites: &[Suite]) -> Self {
        Self {
            n,
            suites: suites.to_vec(),
            h: Vec::new(),
            sample_count: Self::DEFAULT_SAMPLE_COUNT,
            seed: Self::DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            point_box: Self::DEFAULT_BOX,
            warnings: Vec::new(),
        }
    }

    pub fn tolerance(&self, id: &str) -> f64 {
        self.tolerances.get(id).copied().unwrap_or_else(|| default_tolerance(id))
    }

    pub fn has_suite(&self, s: Suite) -> bool {
        self.suites.contains(&s)
    }

    /// The conformal factor as a polynomial on the chart.
    pub fn polynomial(&self) -> Polynomial {
        term_polynomial(&self.h, self.n).expect("validated spec")
    }
}

fn term_exponents(t: &Term, n: usize) -> Result<Vec<u32>, Vec<String>> {
    let nv = coordinate_count(n);
    let mut errors = Vec::new();
    let mut e = match &t.exponents {
        Some(v) if v.len() == nv => v.clone(),
        Some(v) => {
            errors.push(format!("exponent vector has length {} but n = {n} needs {nv}", v.len()));
            vec![0; nv]
        }
        None => vec![0; nv],
    };
    for (name, p) in &t.powers {
        match coordinate_index(name, n) {
            Some(i) => e[i] += p,
            None => errors.push(format!("unknown coordinate '{name}' for n = {n}")),
        }
    }
    if errors.is_empty() {
        Ok(e)
    } else {
        Err(errors)
    }
}

fn term_polynomial(terms: &[Term], n: usize) -> Result<Polynomial, Vec<String>> {
    let nv = coordinate_count(n);
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for t in terms {
        match term_exponents(t, n) {
            Ok(e) => out.push((t.coeff, e)),
            Err(mut es) => errors.append(&mut es),
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    Polynomial::from_terms(nv, out).map_err(|e| vec![e.to_string()])
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}

fn parse_raw(src: &str, json: bool) -> Result<RawSpec, ParseError> {
    if json {
        serde_json::from_str(src).map_err(|e| ParseError {
            format: "json",
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    } else {
        toml::from_str(src).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(src, s.start));
            ParseError {
                format: "toml",
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }
}

fn validate(raw: RawSpec) -> Result<VerificationSpec, ValidationError> {
    let mut v = Vec::new();
    let mut warnings = Vec::new();
    if raw.n < 1 {
        v.push(format!("n must be at least 1, got {}", raw.n));
    }
    let sample_count = raw.sample_count.unwrap_or(VerificationSpec::DEFAULT_SAMPLE_COUNT as i64);
    if sample_count < 1 {
        v.push(format!("sample_count must be at least 1, got {sample_count}"));
    }
    let point_box = raw.point_box.map_or(VerificationSpec::DEFAULT_BOX, |[a, b]| (a, b));
    if !(point_box.0.is_finite() && point_box.1.is_finite() && point_box.0 < point_box.1) {
        v.push(format!("point_box must be a finite interval [lo, hi] with lo < hi, got [{}, {}]", point_box.0, point_box.1));
    }
    let mut suites = raw.suites.clone();
    suites.sort();
    let before = suites.len();
    suites.dedup();
    if suites.len() != before {
        warnings.push("duplicate suite names ignored".to_string());
    }
    if suites.contains(&Suite::Conformal) && raw.h.is_empty() {
        v.push("h must be nonempty when the conformal suite is selected".to_string());
    }
    for t in &raw.h {
        if !t.coeff.is_finite() {
            v.push(format!("coefficient {} is not finite", t.coeff));
        }
    }
    if raw.n >= 1 {
        if let Err(es) = term_polynomial(&raw.h, raw.n as usize) {
            v.extend(es);
        }
    }
    let mut tolerances = BTreeMap::new();
    for (id, value) in raw.tolerances.0 {
        if !(value.is_finite() && value >= 0.0) {
            v.push(format!("tolerance for '{id}' must be finite and nonnegative, got {value}"));
        }
        if let Some(old) = tolerances.insert(id.clone(), value) {
            warnings.push(format!("tolerance '{id}' given more than once ({old:e} then {value:e}); using the last value"));
        }
    }
    if !v.is_empty() {
        return Err(ValidationError { violations: v });
    }
    Ok(VerificationSpec {
        n: raw.n as usize,
        suites,
        h: raw.h,
        sample_count: sample_count as usize,
        seed: raw.seed.unwrap_or(VerificationSpec::DEFAULT_SEED),
        tolerances,
        point_box,
        warnings,
    })
}

/// Parse and validate spec text. JSON is detected by a leading `{`.
pub fn parse_spec(src: &str) -> Result<VerificationSpec, SpecError> {
    let json = src.trim_start().starts_with('{');
    let raw = parse_raw(src, json)?;
    Ok(validate(raw)?)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<VerificationSpec, SpecError> {
    let src = std::fs::read_to_string(path)?;
    parse_spec(&src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_defaults() {
        let s = parse_spec("n = 1\nsuites = [\"heisenberg\"]\n").unwrap();
        assert_eq!(s, VerificationSpec::minimal(1, &[Suite::Heisenberg]));
        let j = parse_spec(r#"{"n": 1, "suites": ["heisenberg"]}"#).unwrap();
        assert_eq!(j, s);
    }

    #[test]
    fn unknown_coordinate() {
        let src = "n = 1\nsuites = [\"conformal\"]\n[[h]]\ncoeff = 1.0\npowers = { t3 = 1 }\n";
        match parse_spec(src) {
            Err(SpecError::Validation(e)) => assert!(e.violations[0].contains("t3"), "{e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_violation_listed() {
        let src = r#"{"n": 0, "suites": ["conformal"], "sample_count": 0, "point_box": [1, -1]}"#;
        match parse_spec(src) {
            Err(SpecError::Validation(e)) => assert_eq!(e.violations.len(), 4, "{e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_tolerances_last_wins() {
        let src = r#"{"n": 1, "tolerances": {"m.trace": 1e-9, "m.trace": 1e-8}}"#;
        let s = parse_spec(src).unwrap();
        assert_eq!(s.tolerance("m.trace"), 1e-8);
        assert_eq!(s.warnings.len(), 1);
        let src = "n = 1\n[[tolerances]]\nid = \"m.trace\"\nvalue = 1e-9\n[[tolerances]]\nid = \"m.trace\"\nvalue = 1e-8\n";
        let t = parse_spec(src).unwrap();
        assert_eq!(t.tolerances, s.tolerances);
        assert_eq!(t.warnings, s.warnings);
    }

    #[test]
    fn parse_error_position() {
        match parse_spec("n = 1\nsuites = [\"heisenberg\"\nseed = 3\n") {
            Err(SpecError::Parse(e)) => {
                assert_eq!(e.format, "toml");
                assert!(e.line >= 2, "{e}");
            }
            other => panic!("{other:?}"),
        }
        match parse_spec("{\"n\": 1,\n \"suites\": [\"bogus\"]}") {
            Err(SpecError::Parse(e)) => {
                assert_eq!((e.format, e.line), ("json", 2));
                assert!(e.message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn polynomial_from_terms() {
        let src = "n = 1\nsuites = [\"conformal\"]\n[[h]]\ncoeff = 1.0\n[[h]]\ncoeff = 1.0\npowers = { t1 = 2 }\n";
        let s = parse_spec(src).unwrap();
        let p = s.polynomial();
        let mut pt = vec![0.0; 7];
        pt[0] = 3.0;
        assert_eq!(p.eval(&pt), 10.0);
    }
}
