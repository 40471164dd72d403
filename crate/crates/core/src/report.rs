//! Common JSON envelope for certificates and analysis reports.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::linalg::{CMat, RMat};

/// Three-valued outcome shared by every report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Affirmative,
    Negative,
    Inconclusive,
}

impl Status {
    /// Process exit code for this outcome (input errors use 3).
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Affirmative => 0,
            Status::Negative => 1,
            Status::Inconclusive => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub kind: String,
    pub verdict: String,
    pub status: Status,
    pub body: Map<String, Value>,
}

impl Report {
    pub fn new(kind: &str, verdict: impl Into<String>, status: Status) -> Self {
        Report { kind: kind.into(), verdict: verdict.into(), status, body: Map::new() }
    }

    /// Add a field; serialization failures become `null`.
    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.insert(key, value);
        self
    }

    pub fn insert(&mut self, key: &str, value: impl Serialize) {
        self.body.insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.body.get(key)
    }

    /// Keys are kept sorted, so the rendering is deterministic.
    pub fn to_json(&self) -> Value {
        let mut m = self.body.clone();
        m.insert("kind".into(), Value::String(self.kind.clone()));
        m.insert("verdict".into(), Value::String(self.verdict.clone()));
        m.insert("status".into(), serde_json::to_value(self.status).unwrap());
        Value::Object(m)
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let Value::Object(m) = v else {
            return Err(Error::InvalidInput("report must be a JSON object".into()));
        };
        let mut body = m.clone();
        let field = |body: &mut Map<String, Value>, k: &str| {
            body.remove(k).ok_or_else(|| Error::InvalidInput(format!("report lacks \"{k}\"")))
        };
        let kind = field(&mut body, "kind")?;
        let verdict = field(&mut body, "verdict")?;
        let status = field(&mut body, "status")?;
        let as_str = |v: Value| match v {
            Value::String(s) => Ok(s),
            _ => Err(Error::InvalidInput("report header fields must be strings".into())),
        };
        let status: Status =
            serde_json::from_value(status).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(Report { kind: as_str(kind)?, verdict: as_str(verdict)?, status, body })
    }
}

pub fn mat_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn rows_to_mat(rows: &[Vec<f64>]) -> Result<RMat> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(RMat::from_fn(r, c, |i, j| rows[i][j]))
}

/// Serde adapter storing a real matrix as nested rows.
pub mod rows {
    use super::*;

    pub fn serialize<S: serde::Serializer>(m: &RMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        mat_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<RMat, D::Error> {
        let v: Vec<Vec<f64>> = Vec::deserialize(d)?;
        rows_to_mat(&v).map_err(serde::de::Error::custom)
    }
}

/// Complex matrix as rows of `[re, im]` pairs.
pub fn cmat_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn complex_list(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_round_trip() {
        let r = Report::new("certificate", "dissipative", Status::Affirmative)
            .with("K", mat_rows(&RMat::identity(2, 2)))
            .with("are_residual", 0.0);
        let v = r.to_json();
        assert_eq!(v["verdict"], "dissipative");
        assert_eq!(v["status"], "affirmative");
        let back = Report::from_json(&v).unwrap();
        assert_eq!(back, r);
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.find("\"K\"").unwrap() < text.find("\"verdict\"").unwrap());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Status::Affirmative.exit_code(), 0);
        assert_eq!(Status::Negative.exit_code(), 1);
        assert_eq!(Status::Inconclusive.exit_code(), 2);
    }
}
