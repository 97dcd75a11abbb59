//! Machine-readable reports.

use std::collections::BTreeMap;
use std::io::Write;

use lcl_core::checker::{AtomicAnalysis, ClassStatus};
use lcl_core::{Decomposition, SemilinearSet, Verdict};
use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_VERSION: u32 = 1;

/// `{"finite": [...], "residues": [...], "modulus": k}` where `residues`
/// lists the first element of each progression.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetJson {
    pub finite: Vec<u64>,
    pub residues: Vec<u64>,
    pub modulus: u64,
    pub text: String,
}

impl From<&SemilinearSet> for SetJson {
    fn from(s: &SemilinearSet) -> SetJson {
        SetJson {
            finite: s.finite_part().to_vec(),
            residues: s.progression_starts(),
            modulus: s.modulus(),
            text: s.to_string(),
        }
    }
}

impl SetJson {
    pub fn to_set(&self) -> SemilinearSet {
        let t = self.residues.iter().copied().min().unwrap_or(1);
        SemilinearSet::from_parts(
            self.finite.iter().copied(),
            self.modulus,
            t,
            self.residues.iter().copied(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassJson {
    pub residue: u64,
    pub status: String,
    pub from: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelJson {
    pub kappa: u64,
    pub classes: Vec<ClassJson>,
    pub direct_horizon: u64,
    pub omega_plus: SetJson,
    pub omega_minus: SetJson,
}

impl From<&AtomicAnalysis> for LabelJson {
    fn from(a: &AtomicAnalysis) -> LabelJson {
        LabelJson {
            kappa: a.kappa,
            classes: a
                .classes
                .iter()
                .map(|c| ClassJson {
                    residue: c.residue,
                    status: match c.status {
                        ClassStatus::In => "in",
                        ClassStatus::Out => "out",
                        ClassStatus::Unknown => "unknown",
                    }
                    .to_string(),
                    from: c.from,
                })
                .collect(),
            direct_horizon: a.direct_horizon,
            omega_plus: (&a.evidence.over).into(),
            omega_minus: (&a.evidence.under).into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub formula: String,
    pub verdict: String,
    pub start: u64,
    pub witness: Option<u64>,
    pub omega_plus: SetJson,
    pub omega_minus: SetJson,
    pub per_label: BTreeMap<String, LabelJson>,
    pub runtime_s: f64,
}

impl VerdictJson {
    pub fn new(formula: String, v: &Verdict, labels: &[AtomicAnalysis], runtime_s: f64) -> VerdictJson {
        VerdictJson {
            formula,
            verdict: v.kind.to_string(),
            start: v.start,
            witness: v.witness,
            omega_plus: (&v.evidence.over).into(),
            omega_minus: (&v.evidence.under).into(),
            per_label: labels.iter().map(|a| (a.label.clone(), a.into())).collect(),
            runtime_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentJson {
    pub dim: usize,
    pub radius: f64,
    pub period: u32,
    pub second_radius: f64,
    pub peripheral: Vec<[f64; 2]>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub model: String,
    pub d: usize,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    pub kappa: u64,
    pub components: Vec<ComponentJson>,
    pub notes: Vec<String>,
}

impl SpectrumJson {
    pub fn new(model: &str, d: usize, bond_dim: usize, dec: &Decomposition) -> SpectrumJson {
        SpectrumJson {
            model: model.to_string(),
            d,
            bond_dim,
            kappa: dec.kappa,
            components: dec
                .components
                .iter()
                .map(|c| ComponentJson {
                    dim: c.dim(),
                    radius: c.radius,
                    period: c.period,
                    second_radius: c.second_radius,
                    peripheral: c.peripheral_values().iter().map(|z| [z.re, z.im]).collect(),
                    degenerate: c.degenerate,
                })
                .collect(),
            notes: dec.notes.clone(),
        }
    }

    pub fn table(&self) -> String {
        let mut s = format!(
            "{} (d = {}, D = {}, kappa = {})\n{:>4} {:>6} {:>12} {:>6} {:>12}\n",
            self.model, self.d, self.bond_dim, self.kappa, "m", "D_m", "r_m", "p_m", "s_m"
        );
        for (i, c) in self.components.iter().enumerate() {
            s.push_str(&format!(
                "{:>4} {:>6} {:>12.9} {:>6} {:>12.9}{}\n",
                i + 1,
                c.dim,
                c.radius,
                c.period,
                c.second_radius,
                if c.degenerate { "  (degenerate)" } else { "" }
            ));
        }
        for n in &self.notes {
            s.push_str(&format!("note: {n}\n"));
        }
        s
    }
}

/// One `(model, formula, D)` instance of a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub model: String,
    pub formula: String,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    /// `T`, `F`, `U` or `TO`.
    pub verdict: String,
    pub runtime_s: f64,
    pub peak_memory_mb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub seed: u64,
    pub timeout_s: f64,
    pub rows: Vec<RunRow>,
}

impl RunReport {
    pub fn new(seed: u64, timeout_s: f64, rows: Vec<RunRow>) -> RunReport {
        RunReport {
            version: REPORT_VERSION,
            seed,
            timeout_s,
            rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// One line per `(model, D)`, one column per formula, cells
    /// `Verdict / Runtime / PeakMemory` with `-` for missing memory.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut formulas: Vec<&str> = Vec::new();
        let mut keys: Vec<(&str, usize)> = Vec::new();
        for r in &self.rows {
            if !formulas.contains(&r.formula.as_str()) {
                formulas.push(&r.formula);
            }
            if !keys.contains(&(r.model.as_str(), r.bond_dim)) {
                keys.push((&r.model, r.bond_dim));
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["model".to_string(), "D".to_string()];
        header.extend(formulas.iter().map(|f| f.to_string()));
        w.write_record(&header)?;
        for (model, d) in keys {
            let mut rec = vec![model.to_string(), d.to_string()];
            for f in &formulas {
                let cell = self
                    .rows
                    .iter()
                    .find(|r| r.model == model && r.bond_dim == d && r.formula == *f)
                    .map(|r| {
                        let mem = r.peak_memory_mb.map_or("-".to_string(), |m| format!("{m:.3}"));
                        format!("{} / {:.4} / {}", r.verdict, r.runtime_s, mem)
                    })
                    .unwrap_or_default();
                rec.push(cell);
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8")
    }
}
