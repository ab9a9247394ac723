//! JSON summary reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::verify::checks::{LawCheckReport, MarginalReport};

/// Flat summary shared by `verify` and `simulate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub strategy: String,
    pub law: String,
    pub n_paths: usize,
    pub h_ladder: Vec<f64>,
    pub sup_err: Vec<f64>,
    pub fitted_order: Option<f64>,
    pub z_scores: Vec<f64>,
    pub pass: bool,
}

impl Summary {
    pub fn validate(&self) -> Result<()> {
        if self.h_ladder.len() != self.sup_err.len() {
            return Err(Error::Parse(format!(
                "h_ladder has {} entries but sup_err has {}",
                self.h_ladder.len(),
                self.sup_err.len()
            )));
        }
        if self.h_ladder.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Parse("step sizes must be positive and finite".into()));
        }
        if self.sup_err.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return Err(Error::Parse("errors must be non-negative and finite".into()));
        }
        if self.z_scores.iter().any(|z| !z.is_finite())
            || self.fitted_order.is_some_and(|p| !p.is_finite())
        {
            return Err(Error::Parse("z-scores and order must be finite".into()));
        }
        Ok(())
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> Result<String> {
        self.validate()?;
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let summary: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        summary.validate()?;
        Ok(summary)
    }
}

impl From<&LawCheckReport> for Summary {
    fn from(r: &LawCheckReport) -> Self {
        Self {
            strategy: r.strategy.clone(),
            law: r.law.clone(),
            n_paths: r.n_paths,
            h_ladder: r.h_ladder.clone(),
            sup_err: r.sup_err.clone(),
            fitted_order: r.fitted_order,
            z_scores: Vec::new(),
            pass: r.pass,
        }
    }
}

impl From<&MarginalReport> for Summary {
    /// Infinite z-scores (a deterministic functional off its mean) are
    /// clamped to `±f64::MAX` so the report stays valid JSON.
    fn from(r: &MarginalReport) -> Self {
        Self {
            strategy: r.strategy.clone(),
            law: "linear-functional-decay".into(),
            n_paths: r.n_paths,
            h_ladder: Vec::new(),
            sup_err: Vec::new(),
            fitted_order: None,
            z_scores: r.entries.iter().map(|e| e.z.clamp(-f64::MAX, f64::MAX)).collect(),
            pass: r.pass,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Summary {
        Summary {
            strategy: "rotation".into(),
            law: "flat-perverse".into(),
            n_paths: 200,
            h_ladder: vec![4e-3, 2e-3, 1e-3, 5e-4],
            sup_err: vec![0.07, 0.046, 0.031, 0.0226],
            fitted_order: Some(0.55),
            z_scores: vec![0.1, -1.3],
            pass: false,
        }
    }

    #[test]
    fn round_trip() {
        let s = sample();
        assert_eq!(Summary::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn rejects_inconsistent_reports() {
        let mut s = sample();
        s.sup_err.pop();
        assert!(s.to_json().is_err());
        let text = sample().to_json().unwrap().replace("\"pass\"", "\"extra\": 1, \"pass\"");
        assert!(Summary::from_json(&text).is_err());
        assert!(Summary::from_json("{}").is_err());
    }
}
