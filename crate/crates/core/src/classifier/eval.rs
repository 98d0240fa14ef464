use serde::{Deserialize, Serialize};

use super::ClassificationResult;
use crate::behavior::BehaviorLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: BehaviorLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub per_label: Vec<LabelMetrics>,
    pub cohen_kappa: f64,
    pub mean_true_label_rank: f64,
    /// confusion[gold][predicted]
    pub confusion: [[usize; 6]; 6],
}

/// Multi-class metrics of predictions against gold labels. Labels with no
/// predictions get precision 0; labels with no support get recall 0.
pub fn evaluate_classifier(predictions: &[ClassificationResult], gold: &[BehaviorLabel]) -> Result<ClassifierEvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::LengthMismatch(predictions.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(Error::EmptyPopulation);
    }
    let n = gold.len();
    let mut confusion = [[0usize; 6]; 6];
    let mut rank_sum = 0usize;
    for (p, g) in predictions.iter().zip(gold) {
        confusion[g.index()][p.label.index()] += 1;
        rank_sum += p.rank_of(*g).unwrap_or(BehaviorLabel::COUNT);
    }
    let correct: usize = (0..6).map(|i| confusion[i][i]).sum();
    let accuracy = correct as f64 / n as f64;

    let per_label = BehaviorLabel::ALL
        .iter()
        .map(|&label| {
            let i = label.index();
            let tp = confusion[i][i] as f64;
            let predicted: usize = (0..6).map(|g| confusion[g][i]).sum();
            let support: usize = confusion[i].iter().sum();
            let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let recall = if support > 0 { tp / support as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            LabelMetrics { label, precision, recall, f1, support }
        })
        .collect();

    let nf = n as f64;
    let expected: f64 = (0..6)
        .map(|i| {
            let row: usize = confusion[i].iter().sum();
            let col: usize = (0..6).map(|g| confusion[g][i]).sum();
            (row as f64 / nf) * (col as f64 / nf)
        })
        .sum();
    let cohen_kappa = if (1.0 - expected).abs() < 1e-15 {
        if accuracy == 1.0 { 1.0 } else { 0.0 }
    } else {
        (accuracy - expected) / (1.0 - expected)
    };

    Ok(ClassifierEvalReport {
        n,
        accuracy,
        per_label,
        cohen_kappa,
        mean_true_label_rank: rank_sum as f64 / nf,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use BehaviorLabel::*;

    fn pred(label: BehaviorLabel) -> ClassificationResult {
        let mut ranking = vec![label];
        ranking.extend(BehaviorLabel::ALL.into_iter().filter(|l| *l != label));
        ClassificationResult { label, ranking, reasoning: String::new() }
    }

    #[test]
    fn perfect_predictions() {
        let gold = BehaviorLabel::ALL.to_vec();
        let preds: Vec<_> = gold.iter().map(|l| pred(*l)).collect();
        let r = evaluate_classifier(&preds, &gold).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.mean_true_label_rank, 1.0);
        assert_eq!(r.cohen_kappa, 1.0);
    }

    #[test]
    fn half_right_by_hand() {
        // gold   F  F  F  Z  Z  Z      (F = FIGHT, Z = FREEZE)
        // pred   F  F  Z  Z  F  H      (H = HIDE_IN_PLACE)
        let gold = [Fight, Fight, Fight, Freeze, Freeze, Freeze];
        let preds: Vec<_> = [Fight, Fight, Freeze, Freeze, Fight, HideInPlace].into_iter().map(pred).collect();
        let r = evaluate_classifier(&preds, &gold).unwrap();
        assert_eq!(r.accuracy, 0.5);
        // Marginals: gold F .5, Z .5; predicted F .5, Z 1/3, H 1/6.
        let pe = 0.5 * 0.5 + 0.5 / 3.0;
        assert!((r.cohen_kappa - (0.5 - pe) / (1.0 - pe)).abs() < 1e-12);
        let fight = r.per_label.iter().find(|m| m.label == Fight).unwrap();
        assert!((fight.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((fight.recall - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.confusion[Freeze.index()][HideInPlace.index()], 1);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(evaluate_classifier(&[pred(Fight)], &[]), Err(Error::LengthMismatch(1, 0))));
    }
}
