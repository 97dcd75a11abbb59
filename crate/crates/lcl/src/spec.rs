//! Label/spec files:
//! `{"labels": {"nz": {"expr": "val(N)", "in": "(0, inf)"}}, "formula": "G nz"}`.
//!
//! Each label takes exactly one of `in` (interval text), `abs_lt: x`
//! (the interval `(−x, x)`), `out` (complement of an interval) or
//! `abs_gt: x` (complement of `[−x, x]`).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lcl_core::logic::{parse_expr, parse_formula, parse_interval};
use lcl_core::{Formula, IntervalPredicate, Label};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    pub expr: String,
    #[serde(rename = "in", default, skip_serializing_if = "Option::is_none")]
    pub inside: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_lt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_gt: Option<f64>,
}

impl LabelSpec {
    pub fn to_label(&self, name: &str) -> Result<Label> {
        let ctx = format!("label `{name}`");
        let expr = parse_expr(&self.expr).map_err(|e| Error::format(&ctx, e.to_string()))?;
        let band = |x: f64, open: bool| -> Result<IntervalPredicate> {
            IntervalPredicate::new(-x, x, open, open).map_err(|e| Error::format(&ctx, e.to_string()))
        };
        let interval = |text: &str| parse_interval(text).map_err(|e| Error::format(&ctx, e.to_string()));
        let given = [
            self.inside.is_some(),
            self.abs_lt.is_some(),
            self.out.is_some(),
            self.abs_gt.is_some(),
        ];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(Error::format(ctx, "needs exactly one of `in`, `abs_lt`, `out`, `abs_gt`"));
        }
        Ok(if let Some(t) = &self.inside {
            Label::new(name, expr, interval(t)?)
        } else if let Some(x) = self.abs_lt {
            Label::new(name, expr, band(x, true)?)
        } else if let Some(t) = &self.out {
            Label::outside(name, expr, interval(t)?)
        } else {
            Label::outside(name, expr, band(self.abs_gt.expect("checked"), false)?)
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub labels: BTreeMap<String, LabelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formula: Option<String>,
}

impl SpecFile {
    pub fn parse(text: &str) -> std::result::Result<SpecFile, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn labels(&self) -> Result<Vec<Label>> {
        self.labels.iter().map(|(n, s)| s.to_label(n)).collect()
    }

    /// `text`, or the file's own formula when `text` is `None`.
    pub fn formula_text<'a>(&'a self, text: Option<&'a str>) -> Result<&'a str> {
        text.or(self.formula.as_deref())
            .ok_or_else(|| Error::format("spec", "no formula given"))
    }

    /// The formula given by `text`, or the file's own when `text` is `None`.
    pub fn formula(&self, text: Option<&str>) -> Result<Formula> {
        Ok(parse_formula(self.formula_text(text)?, &self.labels()?)?)
    }
}

pub fn load_spec(path: &Path) -> Result<SpecFile> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    SpecFile::parse(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}
