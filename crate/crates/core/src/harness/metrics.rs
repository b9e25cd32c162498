//! Label accuracy, FEVER score, macro-F1 and confusion counts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::pipeline::ClaimTrace;
use crate::model::{Claim, VerdictLabel};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimFailure {
    pub claim_id: u64,
    pub error: String,
}

/// Scores over the claims that were verified; failed claims are listed separately and
/// do not enter any ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub evaluated: usize,
    pub accuracy: f64,
    pub fever_score: f64,
    pub macro_f1: f64,
    /// Keyed by label name.
    pub per_class: BTreeMap<String, ClassMetrics>,
    /// `confusion[gold][predicted]`, both indexed Refutes, NEI, Supports.
    pub confusion: [[usize; 3]; 3],
    #[serde(default)]
    pub failures: Vec<ClaimFailure>,
    #[serde(default)]
    pub trace_path: Option<PathBuf>,
}

/// One verified claim as seen by the metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub gold: VerdictLabel,
    pub predicted: VerdictLabel,
    /// At least one complete gold group is among the evidence sentences.
    pub evidence_found: bool,
}

impl Outcome {
    pub fn correct(&self) -> bool {
        self.gold == self.predicted
    }

    /// Correct label, and for Supports/Refutes also the evidence condition.
    pub fn fever_correct(&self) -> bool {
        self.correct() && (self.gold == VerdictLabel::Nei || self.evidence_found)
    }

    pub fn from_trace(claim: &Claim, trace: &ClaimTrace) -> Option<Self> {
        let gold = claim.gold_label?;
        let refs = trace.evidence_refs();
        let evidence_found =
            claim.gold_evidence.iter().flatten().any(|group| !group.is_empty() && group.iter().all(|r| refs.contains(r)));
        Some(Self { gold, predicted: trace.verdict, evidence_found })
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision or recall with no denominator counts as 0, and so does F1 when both are 0.
pub fn compute_metrics(outcomes: &[Outcome], failures: Vec<ClaimFailure>) -> MetricsReport {
    let mut confusion = [[0usize; 3]; 3];
    for o in outcomes {
        confusion[o.gold.index()][o.predicted.index()] += 1;
    }
    let correct = outcomes.iter().filter(|o| o.correct()).count();
    let fever = outcomes.iter().filter(|o| o.fever_correct()).count();

    let mut per_class = BTreeMap::new();
    let mut f1_sum = 0.0;
    for label in VerdictLabel::ALL {
        let i = label.index();
        let tp = confusion[i][i];
        let predicted: usize = (0..3).map(|g| confusion[g][i]).sum();
        let support: usize = confusion[i].iter().sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        f1_sum += f1;
        per_class.insert(label.as_str().to_string(), ClassMetrics { precision, recall, f1, support });
    }

    MetricsReport {
        evaluated: outcomes.len(),
        accuracy: ratio(correct, outcomes.len()),
        fever_score: ratio(fever, outcomes.len()),
        macro_f1: f1_sum / 3.0,
        per_class,
        confusion,
        failures,
        trace_path: None,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "claims evaluated  {}", self.evaluated);
        let _ = writeln!(s, "claims failed     {}", self.failures.len());
        let _ = writeln!(s, "label accuracy    {:.4}", self.accuracy);
        let _ = writeln!(s, "FEVER score       {:.4}", self.fever_score);
        let _ = writeln!(s, "macro F1          {:.4}", self.macro_f1);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<16} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
        for label in VerdictLabel::ALL {
            let m = &self.per_class[label.as_str()];
            let _ = writeln!(
                s,
                "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                label.as_str(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "confusion (rows gold, columns predicted)");
        let _ = writeln!(s, "{:<16} {:>8} {:>8} {:>8}", "", "REFUTES", "NEI", "SUPPORTS");
        for label in VerdictLabel::ALL {
            let row = self.confusion[label.index()];
            let _ = writeln!(s, "{:<16} {:>8} {:>8} {:>8}", label.as_str(), row[0], row[1], row[2]);
        }
        if let Some(p) = &self.trace_path {
            let _ = writeln!(s, "\ntrace: {}", p.display());
        }
        for f in &self.failures {
            let _ = writeln!(s, "failed claim {}: {}", f.claim_id, f.error);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerdictLabel::*;

    fn o(gold: VerdictLabel, predicted: VerdictLabel, evidence_found: bool) -> Outcome {
        Outcome { gold, predicted, evidence_found }
    }

    #[test]
    fn all_correct_with_evidence() {
        let r = compute_metrics(&[o(Supports, Supports, true), o(Refutes, Refutes, true), o(Nei, Nei, false)], vec![]);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.fever_score, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn missing_evidence_counts_for_accuracy_only() {
        let r = compute_metrics(&[o(Supports, Supports, false)], vec![]);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.fever_score, 0.0);
    }

    #[test]
    fn per_class_and_confusion() {
        let r = compute_metrics(
            &[o(Supports, Supports, true), o(Supports, Nei, true), o(Refutes, Supports, true), o(Nei, Nei, false)],
            vec![],
        );
        assert_eq!(r.confusion[Supports.index()][Nei.index()], 1);
        let s = r.per_class["SUPPORTS"];
        assert_eq!((s.precision, s.recall, s.support), (0.5, 0.5, 2));
        let refutes = r.per_class["REFUTES"];
        assert_eq!((refutes.precision, refutes.recall, refutes.f1), (0.0, 0.0, 0.0));
        let nei = r.per_class["NOT ENOUGH INFO"];
        assert!((nei.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.macro_f1 - (0.5 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
        assert!(r.to_text().contains("label accuracy    0.5000"));
    }

    #[test]
    fn empty_is_zero() {
        let r = compute_metrics(&[], vec![]);
        assert_eq!((r.accuracy, r.fever_score, r.macro_f1), (0.0, 0.0, 0.0));
    }
}
