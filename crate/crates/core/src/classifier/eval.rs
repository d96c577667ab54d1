use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Model;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::IqFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrAccuracy {
    pub snr_db: i32,
    pub frames: usize,
    pub correct: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: String,
    pub frames: usize,
    pub correct: usize,
    /// `None` when the class has no test frames.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub frames: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
    pub per_snr: Vec<SnrAccuracy>,
    pub per_class: Vec<ClassAccuracy>,
    pub label_map: Vec<String>,
    /// Raw counts, rows = true class, columns = predicted class.
    pub confusion_counts: Vec<Vec<usize>>,
    /// Row-normalized confusion matrix; rows of absent classes are zero.
    pub confusion: Vec<Vec<f64>>,
    pub metadata: serde_json::Value,
}

/// Classifies every frame of `test` and tabulates the results.
pub fn evaluate(model: &Model, test: &Dataset, exec: Execution) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::Sizing("test set is empty".into()));
    }
    if test.header.label_map != model.label_map {
        return Err(Error::LabelMismatch(format!(
            "model labels {:?} differ from test set labels {:?}",
            model.label_map, test.header.label_map
        )));
    }
    let refs: Vec<&IqFrame> = test.frames.iter().collect();
    let predicted = model.predict(&refs, exec)?;

    let c = model.spec.classes;
    let mut counts = vec![vec![0usize; c]; c];
    let mut by_snr: BTreeMap<i32, (usize, usize)> = BTreeMap::new();
    for (frame, &p) in test.frames.iter().zip(&predicted) {
        let truth = usize::from(frame.label);
        counts[truth][p] += 1;
        let e = by_snr.entry(frame.snr_db).or_default();
        e.0 += 1;
        e.1 += usize::from(truth == p);
    }
    let correct: usize = (0..c).map(|k| counts[k][k]).sum();
    let per_snr = by_snr
        .into_iter()
        .map(|(snr_db, (frames, correct))| SnrAccuracy {
            snr_db,
            frames,
            correct,
            accuracy: correct as f64 / frames as f64,
        })
        .collect();
    let per_class = (0..c)
        .map(|k| {
            let frames: usize = counts[k].iter().sum();
            ClassAccuracy {
                class: model.label_map[k].clone(),
                frames,
                correct: counts[k][k],
                accuracy: (frames > 0).then(|| counts[k][k] as f64 / frames as f64),
            }
        })
        .collect();
    let confusion = counts
        .iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            row.iter()
                .map(|&v| if n > 0 { v as f64 / n as f64 } else { 0.0 })
                .collect()
        })
        .collect();
    Ok(EvaluationReport {
        frames: test.len(),
        correct,
        overall_accuracy: correct as f64 / test.len() as f64,
        per_snr,
        per_class,
        label_map: model.label_map.clone(),
        confusion_counts: counts,
        confusion,
        metadata: serde_json::json!({
            "model": model.provenance,
            "test_set": {
                "master_seed": test.header.master_seed,
                "frames": test.len(),
                "generation": test.header.generation,
            },
        }),
    })
}

impl EvaluationReport {
    pub fn class_accuracy(&self, class: &str) -> Option<f64> {
        self.per_class.iter().find(|c| c.class == class)?.accuracy
    }

    fn header_comment(&self, title: &str) -> String {
        format!(
            "# {title}\n# overall_accuracy={:.6} frames={}\n# metadata={}\n",
            self.overall_accuracy,
            self.frames,
            serde_json::to_string(&self.metadata).unwrap_or_default()
        )
    }

    pub fn snr_table(&self) -> String {
        let mut out = self.header_comment("accuracy vs SNR");
        out.push_str("snr_db,frames,correct,accuracy\n");
        for s in &self.per_snr {
            let _ = writeln!(
                out,
                "{},{},{},{:.6}",
                s.snr_db, s.frames, s.correct, s.accuracy
            );
        }
        out
    }

    pub fn class_table(&self) -> String {
        let mut out = self.header_comment("per-class accuracy");
        out.push_str("class,frames,correct,accuracy\n");
        for c in &self.per_class {
            let acc = c.accuracy.map(|a| format!("{a:.6}")).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{acc}", c.class, c.frames, c.correct);
        }
        out
    }

    pub fn confusion_table(&self) -> String {
        let mut out = self
            .header_comment("confusion matrix (rows = true, columns = predicted, row-normalized)");
        out.push_str("true");
        for l in &self.label_map {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (l, row) in self.label_map.iter().zip(&self.confusion) {
            out.push_str(l);
            for v in row {
                let _ = write!(out, ",{v:.6}");
            }
            out.push('\n');
        }
        out
    }

    /// Writes `report.json`, `accuracy_vs_snr.csv`, `per_class.csv` and
    /// `confusion.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let files = [
            ("report.json", serde_json::to_string_pretty(self)? + "\n"),
            ("accuracy_vs_snr.csv", self.snr_table()),
            ("per_class.csv", self.class_table()),
            ("confusion.csv", self.confusion_table()),
        ];
        for (name, body) in files {
            std::fs::write(dir.join(name), body)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }
}
