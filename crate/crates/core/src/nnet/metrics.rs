use crate::autolabel::SurfaceClass;
use crate::{Error, Result};

use super::{Model, Window, NUM_CLASSES};

/// Confusion matrix (rows true, columns predicted) and derived scores.
///
/// Macro averages run over the classes that occur in either the truth or
/// the predictions. Micro averages equal accuracy for single-label data.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub confusion: [[u64; NUM_CLASSES]; NUM_CLASSES],
    pub accuracy: f64,
    pub per_class_precision: [f64; NUM_CLASSES],
    pub per_class_recall: [f64; NUM_CLASSES],
    pub per_class_f1: [f64; NUM_CLASSES],
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_predictions(truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.is_empty() {
            return Err(Error::invalid("no samples to evaluate"));
        }
        if truth.len() != predicted.len() {
            return Err(Error::invalid(format!(
                "{} labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut confusion = [[0u64; NUM_CLASSES]; NUM_CLASSES];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= NUM_CLASSES || p >= NUM_CLASSES {
                return Err(Error::invalid(format!("class index out of range ({t}, {p})")));
            }
            confusion[t][p] += 1;
        }
        Ok(Metrics::from_confusion(confusion))
    }

    pub fn from_confusion(confusion: [[u64; NUM_CLASSES]; NUM_CLASSES]) -> Self {
        let total: u64 = confusion.iter().flatten().sum();
        let trace: u64 = (0..NUM_CLASSES).map(|k| confusion[k][k]).sum();
        let mut precision = [0.0; NUM_CLASSES];
        let mut recall = [0.0; NUM_CLASSES];
        let mut f1 = [0.0; NUM_CLASSES];
        let mut present = Vec::new();
        for k in 0..NUM_CLASSES {
            let support: u64 = confusion[k].iter().sum();
            let predicted: u64 = (0..NUM_CLASSES).map(|t| confusion[t][k]).sum();
            precision[k] = ratio(confusion[k][k], predicted);
            recall[k] = ratio(confusion[k][k], support);
            f1[k] = if precision[k] + recall[k] > 0.0 {
                2.0 * precision[k] * recall[k] / (precision[k] + recall[k])
            } else {
                0.0
            };
            if support + predicted > 0 {
                present.push(k);
            }
        }
        let mean = |v: &[f64; NUM_CLASSES]| {
            if present.is_empty() {
                0.0
            } else {
                present.iter().map(|&k| v[k]).sum::<f64>() / present.len() as f64
            }
        };
        let accuracy = ratio(trace, total);
        Metrics {
            confusion,
            accuracy,
            macro_precision: mean(&precision),
            macro_recall: mean(&recall),
            macro_f1: mean(&f1),
            per_class_precision: precision,
            per_class_recall: recall,
            per_class_f1: f1,
            micro_precision: accuracy,
            micro_recall: accuracy,
            micro_f1: accuracy,
        }
    }

    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    /// Row-normalised matrix; the diagonal holds per-class recall.
    pub fn normalized(&self) -> [[f64; NUM_CLASSES]; NUM_CLASSES] {
        let mut out = [[0.0; NUM_CLASSES]; NUM_CLASSES];
        for (t, row) in self.confusion.iter().enumerate() {
            let s: u64 = row.iter().sum();
            for p in 0..NUM_CLASSES {
                out[t][p] = ratio(row[p], s);
            }
        }
        out
    }

    /// Two small CSV tables: summary scores, then the confusion matrix.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("macro_precision", self.macro_precision),
            ("macro_recall", self.macro_recall),
            ("macro_f1", self.macro_f1),
            ("micro_precision", self.micro_precision),
            ("micro_recall", self.micro_recall),
            ("micro_f1", self.micro_f1),
        ] {
            s.push_str(&format!("{name},{v}\n"));
        }
        s.push_str("\ntrue_class,pred_thick_ice,pred_thin_ice,pred_open_water,support,recall\n");
        for (t, row) in self.confusion.iter().enumerate() {
            let name = SurfaceClass::from_index(t).map_or("?", |c| c.name());
            s.push_str(&format!(
                "{name},{},{},{},{},{}\n",
                row[0],
                row[1],
                row[2],
                row.iter().sum::<u64>(),
                self.per_class_recall[t]
            ));
        }
        s
    }
}

/// Argmax predictions of `model` scored against `labels`.
pub fn evaluate(model: &Model, data: &[Window], labels: &[usize]) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::invalid("no samples to evaluate"));
    }
    let pred = model.predict(data)?;
    Metrics::from_predictions(labels, &pred)
}
