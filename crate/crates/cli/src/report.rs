//! JSON report schema.
//!
//! Objects are flat; every number is written as a decimal string (floats with
//! 17 significant digits) so that reports round-trip bit-exactly and compare
//! byte-for-byte across platforms.

use std::collections::BTreeMap;

use qch_core::{CheckResult, Profile, ProfileReport};
use serde::{Deserialize, Serialize};

pub const REPORT_REVISION: &str = "1";

/// Float <-> decimal string with 17 significant digits.
pub mod sci {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(x: f64) -> String {
        format!("{x:.16e}")
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

pub mod sci_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&super::sci::format(*v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|raw| raw.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub mod sci_vec {
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&super::sci::format(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|raw| raw.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Integers as decimal strings.
pub mod dec {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(x: &T, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    #[serde(with = "dec")]
    pub n: usize,
    #[serde(with = "dec")]
    pub seed: u64,
    #[serde(with = "sci")]
    pub max_defect: f64,
    #[serde(with = "sci")]
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonvacuous: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "sci_opt")]
    pub elapsed_seconds: Option<f64>,
}

impl CheckRecord {
    pub fn from_check(c: &CheckResult, with_timing: bool) -> Self {
        Self {
            name: c.name.clone(),
            n: c.n,
            seed: c.seed,
            max_defect: c.max_defect,
            tolerance: c.tolerance,
            pass: c.pass,
            nonvacuous: c.nonvacuous,
            elapsed_seconds: with_timing.then_some(c.elapsed.as_secs_f64()),
        }
    }

    pub fn ok(&self) -> bool {
        self.pass && self.nonvacuous != Some(false)
    }
}

/// Solved profile parameters plus the boundary residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRecord {
    #[serde(with = "sci")]
    pub r0: f64,
    #[serde(rename = "L", with = "sci")]
    pub length: f64,
    #[serde(with = "dec")]
    pub k: u32,
    #[serde(with = "dec")]
    pub n: u32,
    #[serde(with = "sci")]
    pub s: f64,
    #[serde(with = "sci")]
    pub gamma0: f64,
    #[serde(with = "sci")]
    pub gamma1: f64,
    #[serde(with = "sci")]
    pub residual_left: f64,
    #[serde(with = "sci")]
    pub residual_right: f64,
    #[serde(with = "sci")]
    pub residual_tolerance: f64,
    pub pass: bool,
}

/// Residual bound for both boundary conditions.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;
/// Bound on `|ab2_alternate − ab2|` inside the margin.
pub const FORM_GAP_TOLERANCE: f64 = 1e-10;

impl ProfileRecord {
    pub fn from_profile(p: &Profile) -> Self {
        let (left, right) = p.boundary_residuals();
        Self {
            r0: p.r0,
            length: p.length,
            k: p.k,
            n: p.n,
            s: p.s,
            gamma0: p.gamma0,
            gamma1: p.gamma1,
            residual_left: left,
            residual_right: right,
            residual_tolerance: BOUNDARY_TOLERANCE,
            pass: left.abs() <= BOUNDARY_TOLERANCE && right.abs() <= BOUNDARY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileReportRecord {
    #[serde(with = "sci_vec")]
    pub grid: Vec<f64>,
    #[serde(with = "sci_vec")]
    pub ab2_values: Vec<f64>,
    #[serde(with = "sci_vec")]
    pub sign_change_points: Vec<f64>,
    #[serde(with = "sci")]
    pub residual_left: f64,
    #[serde(with = "sci")]
    pub residual_right: f64,
    #[serde(with = "sci")]
    pub max_form_gap: f64,
    #[serde(with = "sci")]
    pub margin: f64,
    pub pass: bool,
}

impl ProfileReportRecord {
    pub fn from_report(r: &ProfileReport) -> Self {
        let (left, right) = r.boundary_residuals;
        Self {
            grid: r.grid.clone(),
            ab2_values: r.ab2_values.clone(),
            sign_change_points: r.sign_change_points.clone(),
            residual_left: left,
            residual_right: right,
            max_form_gap: r.max_form_gap,
            margin: r.margin,
            pass: !r.sign_change_points.is_empty()
                && left.abs() <= BOUNDARY_TOLERANCE
                && right.abs() <= BOUNDARY_TOLERANCE
                && r.max_form_gap <= FORM_GAP_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportItem {
    Check(CheckRecord),
    Profile(ProfileRecord),
    ProfileReport(ProfileReportRecord),
}

impl ReportItem {
    pub fn ok(&self) -> bool {
        match self {
            ReportItem::Check(c) => c.ok(),
            ReportItem::Profile(p) => p.pass,
            ReportItem::ProfileReport(r) => r.pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub revision: String,
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub results: Vec<ReportItem>,
    pub overall_pass: bool,
    #[serde(with = "dec")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Report {
    pub fn new(
        command: impl Into<String>,
        parameters: BTreeMap<String, String>,
        results: Vec<ReportItem>,
        seed: u64,
        timestamp: Option<String>,
    ) -> Self {
        let overall_pass = results.iter().all(ReportItem::ok);
        Self {
            revision: REPORT_REVISION.to_string(),
            command: command.into(),
            parameters,
            results,
            overall_pass,
            seed,
            timestamp,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}
