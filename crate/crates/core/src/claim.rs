//! Claim-level verdict from triple-level labels.

use serde::{Deserialize, Serialize};

use crate::model::VerdictLabel;

/// Which rule produced the claim verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimRule {
    /// At least one triple is refuted.
    RefutesPresent,
    /// Nothing refuted, at least one triple lacks information.
    NeiPresent,
    /// Every triple is supported.
    AllSupports,
    /// No claim triples to judge.
    NoTriples,
}

impl ClaimRule {
    pub fn verdict(&self) -> VerdictLabel {
        match self {
            ClaimRule::RefutesPresent => VerdictLabel::Refutes,
            ClaimRule::NeiPresent | ClaimRule::NoTriples => VerdictLabel::Nei,
            ClaimRule::AllSupports => VerdictLabel::Supports,
        }
    }
}

pub fn claim_rule(labels: &[VerdictLabel]) -> ClaimRule {
    if labels.is_empty() {
        ClaimRule::NoTriples
    } else if labels.contains(&VerdictLabel::Refutes) {
        ClaimRule::RefutesPresent
    } else if labels.contains(&VerdictLabel::Nei) {
        ClaimRule::NeiPresent
    } else {
        ClaimRule::AllSupports
    }
}

/// Any Refutes gives Refutes; otherwise any NEI gives NEI; otherwise Supports.
/// An empty list is NEI.
pub fn aggregate_claim(labels: &[VerdictLabel]) -> VerdictLabel {
    claim_rule(labels).verdict()
}

#[cfg(test)]
mod tests {
    use super::*;
    use VerdictLabel::*;

    #[test]
    fn rules() {
        assert_eq!(aggregate_claim(&[Supports, Supports, Refutes, Nei]), Refutes);
        assert_eq!(aggregate_claim(&[Supports, Nei]), Nei);
        assert_eq!(aggregate_claim(&[Supports, Supports]), Supports);
        assert_eq!(aggregate_claim(&[]), Nei);
        assert_eq!(claim_rule(&[]), ClaimRule::NoTriples);
    }

    #[test]
    fn idempotent() {
        for xs in [vec![Supports], vec![Nei, Supports], vec![Refutes, Nei]] {
            let y = aggregate_claim(&xs);
            assert_eq!(aggregate_claim(&[y]), y);
        }
    }
}
