use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvaluationError;

/// Rows are ground truth, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSet {
    pub per_class: Vec<ClassScore>,
    /// Global-count F1; equals accuracy for single-label multi-class data.
    pub micro_f1: f64,
    /// Unweighted mean F1 over classes with non-zero support.
    pub macro_f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion_and_scores(
    truth: &[String],
    pred: &[String],
    classes: &[String],
) -> Result<(ConfusionMatrix, ScoreSet), EvaluationError> {
    if truth.len() != pred.len() {
        return Err(EvaluationError::LengthMismatch { truth: truth.len(), pred: pred.len() });
    }
    if truth.is_empty() {
        return Err(EvaluationError::EmptyInput);
    }
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let lookup = |c: &String| {
        index
            .get(c.as_str())
            .copied()
            .ok_or_else(|| EvaluationError::UnknownClass(c.clone()))
    };
    let n = classes.len();
    let mut counts = vec![vec![0usize; n]; n];
    for (t, p) in truth.iter().zip(pred) {
        counts[lookup(t)?][lookup(p)?] += 1;
    }

    let per_class: Vec<ClassScore> = (0..n)
        .map(|i| {
            let tp = counts[i][i];
            let support: usize = counts[i].iter().sum();
            let predicted: usize = counts.iter().map(|row| row[i]).sum();
            let (fp, fn_) = (predicted - tp, support - tp);
            ClassScore {
                class: classes[i].clone(),
                precision: ratio(tp, predicted),
                recall: ratio(tp, support),
                f1: ratio(2 * tp, 2 * tp + fp + fn_),
                support,
            }
        })
        .collect();

    let matrix = ConfusionMatrix { classes: classes.to_vec(), counts };
    let micro_f1 = ratio(matrix.trace(), matrix.total());
    let supported: Vec<f64> = per_class.iter().filter(|c| c.support > 0).map(|c| c.f1).collect();
    let macro_f1 = if supported.is_empty() {
        0.0
    } else {
        supported.iter().sum::<f64>() / supported.len() as f64
    };
    Ok((matrix, ScoreSet { per_class, micro_f1, macro_f1 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_prediction() {
        let t = v(&["A", "B", "B", "Idle"]);
        let (m, s) = confusion_and_scores(&t, &t, &v(&["A", "B", "Idle"])).unwrap();
        assert_eq!(m.counts, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        assert_eq!(s.micro_f1, 1.0);
        assert_eq!(s.macro_f1, 1.0);
    }

    #[test]
    fn binary_f1_half() {
        // class A: TP=1 (row0), FN=1 (row1), FP=1 (row2)
        let t = v(&["A", "A", "B", "B"]);
        let p = v(&["A", "B", "A", "B"]);
        let (_, s) = confusion_and_scores(&t, &p, &v(&["A", "B"])).unwrap();
        assert_eq!(s.per_class[0].f1, 0.5);
    }

    #[test]
    fn constant_prediction_on_uniform_truth() {
        let t = v(&["A", "B", "A", "B"]);
        let p = v(&["A", "A", "A", "A"]);
        let (_, s) = confusion_and_scores(&t, &p, &v(&["A", "B"])).unwrap();
        assert_eq!(s.micro_f1, 0.5);
        assert_eq!(s.per_class[1].f1, 0.0);
    }

    #[test]
    fn zero_support_excluded_from_macro() {
        let t = v(&["A", "A"]);
        let p = v(&["A", "A"]);
        let (_, s) = confusion_and_scores(&t, &p, &v(&["A", "B"])).unwrap();
        assert_eq!(s.per_class[1].f1, 0.0);
        assert_eq!(s.macro_f1, 1.0);
    }

    #[test]
    fn errors() {
        let c = v(&["A"]);
        assert!(matches!(
            confusion_and_scores(&v(&["A"]), &v(&[]), &c),
            Err(EvaluationError::LengthMismatch { .. })
        ));
        assert!(matches!(confusion_and_scores(&[], &[], &c), Err(EvaluationError::EmptyInput)));
        assert!(matches!(
            confusion_and_scores(&v(&["Z"]), &v(&["A"]), &c),
            Err(EvaluationError::UnknownClass(_))
        ));
    }
}
