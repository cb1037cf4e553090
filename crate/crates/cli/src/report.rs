//! The report envelope shared by every command.

use std::collections::BTreeMap;
use std::fmt::Write;

use halphen_core::Error;
use serde::Serialize;
use serde_json::Value;

/// How `measured` is compared with `tolerance`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<")]
    Below,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Absent when the computation itself failed.
    pub measured: Option<f64>,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl Check {
    fn compare(name: &str, measured: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = measured.is_finite()
            && match relation {
                Relation::Below => measured < tolerance,
                Relation::AtMost => measured <= tolerance,
                Relation::Above => measured > tolerance,
            };
        let diagnostic = (!measured.is_finite()).then(|| "measured value is not finite".to_string());
        Self {
            name: name.into(),
            measured: measured.is_finite().then_some(measured),
            tolerance,
            relation,
            pass,
            diagnostic,
        }
    }

    pub fn below(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::compare(name, measured, tolerance, Relation::Below)
    }

    pub fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self::compare(name, measured, tolerance, Relation::AtMost)
    }

    pub fn above(name: &str, measured: f64, bound: f64) -> Self {
        Self::compare(name, measured, bound, Relation::Above)
    }

    pub fn failed(name: &str, tolerance: f64, relation: Relation, err: &Error) -> Self {
        Self {
            name: name.into(),
            measured: None,
            tolerance,
            relation,
            pass: false,
            diagnostic: Some(err.to_string()),
        }
    }

    /// `measured` from a fallible computation; errors become failed checks.
    pub fn from_result(name: &str, r: Result<f64, Error>, tolerance: f64, relation: Relation) -> Self {
        match r {
            Ok(m) => Self::compare(name, m, tolerance, relation),
            Err(e) => Self::failed(name, tolerance, relation, &e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &str, params: BTreeMap<String, Value>, checks: Vec<Check>, wall_time_s: f64) -> Self {
        // an empty check list would pass vacuously
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        Self {
            command: command.into(),
            params,
            checks,
            pass,
            wall_time_s,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    /// `name,measured,tolerance,relation,pass`, one row per check.
    pub fn checks_csv(&self) -> String {
        let mut s = String::from("name,measured,tolerance,relation,pass\n");
        for c in &self.checks {
            let m = c.measured.map(|v| format!("{v:e}")).unwrap_or_default();
            let rel = match c.relation {
                Relation::Below => "<",
                Relation::AtMost => "<=",
                Relation::Above => ">",
            };
            let _ = writeln!(s, "{},{},{:e},{},{}", c.name, m, c.tolerance, rel, c.pass);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Check::below("a", 1e-13, 1e-12).pass);
        assert!(!Check::below("a", 1e-12, 1e-12).pass);
        assert!(Check::at_most("a", 0.0, 0.0).pass);
        assert!(Check::above("a", 1e-3, 1e-4).pass);
        let nan = Check::below("a", f64::NAN, 1.0);
        assert!(!nan.pass && nan.measured.is_none() && nan.diagnostic.is_some());
        let err = Check::from_result("a", Err(Error::Domain("x".into())), 1.0, Relation::Below);
        assert!(!err.pass);
        assert!(err.diagnostic.unwrap().contains("domain"));
    }

    #[test]
    fn schema() {
        let r = RunReport::new("verify x", BTreeMap::new(), vec![Check::below("c", 0.5, 1.0)], 0.25);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["command", "params", "checks", "pass", "wall_time_s"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let c = &v["checks"][0];
        for key in ["name", "measured", "tolerance", "pass"] {
            assert!(c.get(key).is_some(), "{key}");
        }
        assert_eq!(r.exit_code(), 0);
        assert_eq!(RunReport::new("x", BTreeMap::new(), vec![], 0.0).exit_code(), 1);
    }
}
