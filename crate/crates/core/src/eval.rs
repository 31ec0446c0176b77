//! Confusion matrices and rule-list evaluation reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::RuleList;
use crate::schema::EncodedDataset;

/// Counts indexed `[predicted][actual]`. Real-valued so averaged matrices fit too.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: &[String]) -> Self {
        let k = labels.len();
        ConfusionMatrix {
            labels: labels.to_vec(),
            counts: vec![vec![0.0; k]; k],
        }
    }

    /// Builds a matrix from rows of predicted-class counts.
    pub fn from_rows(labels: &[&str], rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = labels.len();
        if rows.len() != k || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Data(format!("confusion matrix must be {k}x{k}")));
        }
        if rows.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::Data("confusion matrix entries must be non-negative".into()));
        }
        Ok(ConfusionMatrix {
            labels: labels.iter().map(|l| (*l).to_owned()).collect(),
            counts: rows,
        })
    }

    pub fn record(&mut self, predicted: usize, actual: usize) {
        self.counts[predicted][actual] += 1.0;
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total, as a ratio. Zero for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total > 0.0 {
            self.trace() / total
        } else {
            0.0
        }
    }

    /// Mass of `positive` examples predicted as something else, over the total.
    ///
    /// For two classes with `positive = 1` this is the (predicted 0, actual 1) cell.
    pub fn type_i_error(&self, positive: usize) -> f64 {
        let total = self.total();
        if total <= 0.0 {
            return 0.0;
        }
        let missed: f64 = (0..self.counts.len())
            .filter(|&p| p != positive)
            .map(|p| self.counts[p][positive])
            .sum();
        missed / total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    /// Trace over total. Printed as a percentage under the "Precision" column.
    pub accuracy: f64,
    pub type_i_error: f64,
    pub positive_class: usize,
    pub rule_count: usize,
    pub mean_antecedent_length: f64,
    /// How many test examples each rule fired on, in rule order.
    pub rule_fire_counts: Vec<usize>,
    pub default_fire_count: usize,
}

impl EvalReport {
    pub fn from_matrix(confusion: ConfusionMatrix, positive_class: usize, list: Option<&RuleList>) -> Self {
        EvalReport {
            accuracy: confusion.accuracy(),
            type_i_error: confusion.type_i_error(positive_class),
            positive_class,
            rule_count: list.map_or(0, RuleList::len),
            mean_antecedent_length: list.map_or(0.0, RuleList::mean_antecedent_length),
            rule_fire_counts: list.map_or_else(Vec::new, |l| vec![0; l.len()]),
            default_fire_count: 0,
            confusion,
        }
    }

    pub fn accuracy_percent(&self) -> f64 {
        100.0 * self.accuracy
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Classifies every test example and tallies the confusion matrix.
/// The positive class for the Type I error is class 1.
pub fn evaluate(list: &RuleList, test: &EncodedDataset) -> Result<EvalReport> {
    evaluate_with_positive(list, test, 1)
}

pub fn evaluate_with_positive(list: &RuleList, test: &EncodedDataset, positive_class: usize) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::Data("test set is empty".into()));
    }
    if positive_class >= test.num_classes() {
        return Err(Error::Config(format!("positive class #{positive_class} is not a class")));
    }
    let compiled = list.compile(test.encoding())?;
    let mut report = EvalReport::from_matrix(ConfusionMatrix::zeros(&test.schema().class_labels), positive_class, Some(list));
    for (x, &actual) in test.examples.iter().zip(&test.classes) {
        let outcome = compiled.classify(x)?;
        report.confusion.record(outcome.class, actual);
        match outcome.fired {
            Some(i) => report.rule_fire_counts[i] += 1,
            None => report.default_fire_count += 1,
        }
    }
    report.accuracy = report.confusion.accuracy();
    report.type_i_error = report.confusion.type_i_error(positive_class);
    Ok(report)
}

/// Plain-text table with one block per method: prediction rows, then Type I
/// error, precision (accuracy, %), rule count, and mean antecedent length.
pub fn format_table(methods: &[(&str, &EvalReport)]) -> String {
    let Some((_, first)) = methods.first() else {
        return String::new();
    };
    let labels = &first.confusion.labels;
    let name_w = methods.iter().map(|(n, _)| n.len()).chain(["Method".len()]).max().unwrap_or(6);
    let label_w = labels.iter().map(String::len).chain(["Prediction".len()]).max().unwrap_or(10);
    let mut out = String::new();
    let _ = write!(out, "{:<name_w$}  {:<label_w$}", "Method", "Prediction");
    for l in labels {
        let _ = write!(out, "  {:>10}", l);
    }
    let _ = writeln!(out, "  {:>12}  {:>9}  {:>7}  {:>10}", "Type I error", "Precision", "# rules", "Antecedent");
    for (name, report) in methods {
        for (p, row) in report.confusion.counts.iter().enumerate() {
            let method = if p == 0 { *name } else { "" };
            let _ = write!(out, "{:<name_w$}  {:<label_w$}", method, report.confusion.labels[p]);
            for v in row {
                let _ = write!(out, "  {:>10.2}", v);
            }
            if p == 0 {
                let _ = write!(
                    out,
                    "  {:>12.2}  {:>9.2}  {:>7}  {:>10.2}",
                    report.type_i_error,
                    report.accuracy_percent(),
                    report.rule_count,
                    report.mean_antecedent_length
                );
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Condition, Rule};
    use crate::schema::{Attribute, AttributeSchema, Encoding, NumericRange};
    use std::sync::Arc;

    fn two_class(rows: [[f64; 2]; 2]) -> ConfusionMatrix {
        ConfusionMatrix::from_rows(&["Deny", "Accept"], rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn printed_matrices_reproduce_reported_metrics() {
        let lvq_pso = two_class([[1450.26, 314.73], [152.75, 329.26]]);
        assert!((100.0 * lvq_pso.accuracy() - 79.20).abs() <= 0.01);
        assert!((lvq_pso.type_i_error(1) - 0.14).abs() <= 0.005);
        let c45 = two_class([[1422.60, 244.18], [181.61, 398.61]]);
        assert!((100.0 * c45.accuracy() - 81.05).abs() <= 0.01);
        assert!((c45.type_i_error(1) - 0.11).abs() <= 0.005);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(ConfusionMatrix::from_rows(&["a", "b"], vec![vec![1.0, 2.0]]).is_err());
        assert!(ConfusionMatrix::from_rows(&["a", "b"], vec![vec![1.0, -2.0], vec![0.0, 0.0]]).is_err());
    }

    fn dataset(values: &[(f64, usize)]) -> EncodedDataset {
        let schema = AttributeSchema::new(vec![Attribute::numeric("x")], "y", &["Deny", "Accept"]).unwrap();
        let enc = Arc::new(Encoding::new(schema, vec![Some(NumericRange { min: 0.0, max: 1.0 })]).unwrap());
        EncodedDataset::new(enc, values.iter().map(|v| vec![v.0]).collect(), values.iter().map(|v| v.1).collect()).unwrap()
    }

    #[test]
    fn perfect_classifier() {
        let test = dataset(&[(0.1, 0), (0.2, 0), (0.8, 1), (0.9, 1)]);
        let list = RuleList::new(vec![Rule::new(vec![Condition::interval(0, 0.5, 1.0)], 1)], 0);
        let report = evaluate(&list, &test).unwrap();
        assert_eq!(report.accuracy_percent(), 100.0);
        assert_eq!(report.type_i_error, 0.0);
        assert_eq!(report.rule_fire_counts, vec![2]);
        assert_eq!(report.default_fire_count, 2);
        assert_eq!(report.confusion.total(), 4.0);
        assert_eq!(report.mean_antecedent_length, 1.0);
    }

    #[test]
    fn single_class_test_set() {
        let test = dataset(&[(0.1, 0), (0.2, 0)]);
        let list = RuleList::new(vec![], 1);
        let report = evaluate(&list, &test).unwrap();
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.type_i_error, 0.0);
        let report = evaluate_with_positive(&list, &test, 0).unwrap();
        assert_eq!(report.type_i_error, 1.0);
        assert!(matches!(evaluate(&list, &test.subset(&[])), Err(Error::Data(_))));
    }

    #[test]
    fn table_lists_every_method() {
        let m = two_class([[1422.60, 244.18], [181.61, 398.61]]);
        let r = EvalReport::from_matrix(m, 1, None);
        let text = format_table(&[("tree", &r), ("other", &r)]);
        assert_eq!(text.lines().count(), 5);
        assert!(text.contains("81.05"));
        assert!(text.contains("0.11"));
    }
}
