//! Candidate generation and NEI-gated gap filling.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::fact::{EntityTuple, Fact};
use super::model::USchemaModel;
use crate::error::{Error, Result};
use crate::model::{Provenance, Triple, VerdictLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapFillConfig {
    /// Minimum model probability for a candidate to be kept.
    pub threshold: f64,
    /// Also propose every evidence relation over the NEI claim triple's own tuple.
    pub bridge_evidence_relations: bool,
}

impl Default for GapFillConfig {
    fn default() -> Self {
        Self { threshold: 0.5, bridge_evidence_relations: true }
    }
}

impl GapFillConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("uschema threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

fn binary_tuples(triples: &[Triple]) -> Vec<EntityTuple> {
    let mut seen = HashSet::new();
    triples
        .iter()
        .filter(|t| !t.is_unary())
        .map(|t| EntityTuple { subject: t.subject().to_string(), object: t.object().to_string() })
        .filter(|t| seen.insert(t.clone()))
        .collect()
}

fn distinct_relations(triples: &[Triple]) -> Vec<&str> {
    let mut seen = HashSet::new();
    triples.iter().map(Triple::relation).filter(|r| seen.insert(*r)).collect()
}

fn evidence_keys(evidence: &[Triple]) -> HashSet<(&str, &str, &str)> {
    evidence.iter().map(Triple::key).collect()
}

/// Distinct claim relations crossed with distinct evidence tuples, minus facts that
/// already appear verbatim in the evidence. Claim order major, evidence order minor.
/// Unary evidence triples contribute no tuple.
pub fn generate_candidates(claim: &[Triple], evidence: &[Triple]) -> Vec<Fact> {
    let present = evidence_keys(evidence);
    let tuples = binary_tuples(evidence);
    let mut out = Vec::new();
    for rel in distinct_relations(claim) {
        for tuple in &tuples {
            if !present.contains(&(tuple.subject.as_str(), rel, tuple.object.as_str())) {
                out.push(Fact { relation: rel.to_string(), tuple: tuple.clone() });
            }
        }
    }
    out
}

/// Evidence relations applied to the claim triple's own tuple, minus facts present in
/// the evidence. Empty for unary claim triples.
pub fn bridging_candidates(claim_triple: &Triple, evidence: &[Triple]) -> Vec<Fact> {
    if claim_triple.is_unary() {
        return Vec::new();
    }
    let present = evidence_keys(evidence);
    let tuple = EntityTuple { subject: claim_triple.subject().to_string(), object: claim_triple.object().to_string() };
    distinct_relations(evidence)
        .into_iter()
        .filter(|rel| *rel != claim_triple.relation())
        .filter(|rel| !present.contains(&(tuple.subject.as_str(), rel, tuple.object.as_str())))
        .map(|rel| Fact { relation: rel.to_string(), tuple: tuple.clone() })
        .collect()
}

/// A proposed fact with its model probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub fact: Fact,
    pub probability: f64,
}

/// For each claim triple labelled NEI, the candidates scoring at or above the
/// threshold, as triples marked with universal-schema provenance. Every other claim
/// triple maps to an empty list. Output is aligned with `claim`.
pub fn fill_gaps(
    model: &USchemaModel,
    claim: &[Triple],
    evidence: &[Triple],
    labels: &[VerdictLabel],
    cfg: &GapFillConfig,
) -> Result<Vec<Vec<Triple>>> {
    Ok(fill_gaps_scored(model, claim, evidence, labels, cfg)?
        .into_iter()
        .map(|cands| cands.iter().filter_map(|c| materialize(&c.fact)).collect())
        .collect())
}

/// Like [`fill_gaps`] but keeps the probabilities.
pub fn fill_gaps_scored(
    model: &USchemaModel,
    claim: &[Triple],
    evidence: &[Triple],
    labels: &[VerdictLabel],
    cfg: &GapFillConfig,
) -> Result<Vec<Vec<ScoredCandidate>>> {
    cfg.validate()?;
    if labels.len() != claim.len() {
        return Err(Error::Config(format!("{} labels for {} claim triples", labels.len(), claim.len())));
    }
    let mut out = vec![Vec::new(); claim.len()];
    if !labels.contains(&VerdictLabel::Nei) {
        return Ok(out);
    }
    let shared = score_and_filter(model, generate_candidates(claim, evidence), cfg.threshold)?;
    for (i, (triple, label)) in claim.iter().zip(labels).enumerate() {
        if *label != VerdictLabel::Nei {
            continue;
        }
        let mut kept = shared.clone();
        if cfg.bridge_evidence_relations {
            let known: HashSet<Fact> = kept.iter().map(|c| c.fact.clone()).collect();
            let extra: Vec<Fact> =
                bridging_candidates(triple, evidence).into_iter().filter(|f| !known.contains(f)).collect();
            kept.extend(score_and_filter(model, extra, cfg.threshold)?);
        }
        out[i] = kept;
    }
    Ok(out)
}

fn score_and_filter(model: &USchemaModel, facts: Vec<Fact>, threshold: f64) -> Result<Vec<ScoredCandidate>> {
    if facts.is_empty() {
        return Ok(Vec::new());
    }
    let probs = model.score_facts(&facts)?;
    Ok(facts
        .into_iter()
        .zip(probs)
        .map(|(fact, probability)| ScoredCandidate { fact, probability })
        .filter(|c| c.probability >= threshold)
        .collect())
}

fn materialize(fact: &Fact) -> Option<Triple> {
    fact.to_triple().ok().map(|t| t.with_provenance(Provenance::UniversalSchema))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashedEmbedder;
    use std::sync::Arc;
    use VerdictLabel::*;

    fn t(s: &str, r: &str, o: &str) -> Triple {
        Triple::new(s, r, o).unwrap()
    }

    fn identity() -> USchemaModel {
        USchemaModel::identity(Arc::new(HashedEmbedder::new(16)))
    }

    #[test]
    fn single_relation_single_tuple() {
        let c = generate_candidates(&[t("Manning", "member of", "Stanford")], &[t("Manning", "professor of", "Stanford")]);
        assert_eq!(c, vec![Fact::new("Manning", "member of", "Stanford").unwrap()]);
    }

    #[test]
    fn overlap_with_evidence_removed() {
        let claim = [t("A", "r1", "B"), t("A", "r2", "B")];
        let evidence = [t("X", "r1", "Y"), t("P", "q", "Q"), t("M", "q", "N")];
        let c = generate_candidates(&claim, &evidence);
        assert_eq!(c.len(), 5);
        assert_eq!(c[0], Fact::new("P", "r1", "Q").unwrap());
        assert_eq!(c[4], Fact::new("M", "r2", "N").unwrap());
    }

    #[test]
    fn empty_evidence_gives_nothing() {
        assert!(generate_candidates(&[t("A", "r", "B")], &[]).is_empty());
    }

    #[test]
    fn unary_evidence_contributes_no_tuple() {
        let evidence = [Triple::unary("Tom", "sleeps").unwrap()];
        assert!(generate_candidates(&[t("A", "r", "B")], &evidence).is_empty());
    }

    #[test]
    fn bridging_uses_claim_tuple() {
        let claim = t("TAPN", "was reviewed by", "Ron Underwood");
        let evidence = [t("a comedy film", "directed by", "Ron Underwood"), t("TAPN", "is", "a comedy film")];
        let b = bridging_candidates(&claim, &evidence);
        assert_eq!(
            b,
            vec![
                Fact::new("TAPN", "directed by", "Ron Underwood").unwrap(),
                Fact::new("TAPN", "is", "Ron Underwood").unwrap()
            ]
        );
    }

    #[test]
    fn nei_gate() {
        let model = identity();
        let claim = [t("A", "r", "B"), t("C", "q", "D")];
        let evidence = [t("E", "p", "F")];
        let cfg = GapFillConfig { threshold: 0.0, ..GapFillConfig::default() };
        let out = fill_gaps(&model, &claim, &evidence, &[Supports, Nei], &cfg).unwrap();
        assert!(out[0].is_empty());
        assert!(!out[1].is_empty());
        assert!(out[1].iter().all(|t| t.provenance() == Some(&Provenance::UniversalSchema)));
        let out = fill_gaps(&model, &claim, &evidence, &[Supports, Refutes], &cfg).unwrap();
        assert!(out.iter().all(Vec::is_empty));
    }

    #[test]
    fn threshold_one_keeps_nothing() {
        let model = identity();
        let cfg = GapFillConfig { threshold: 1.0, ..GapFillConfig::default() };
        let out = fill_gaps(&model, &[t("A", "r", "B")], &[t("A", "r", "B"), t("E", "p", "F")], &[Nei], &cfg).unwrap();
        assert!(out[0].is_empty());
    }

    #[test]
    fn misaligned_labels_rejected() {
        let model = identity();
        assert!(fill_gaps(&model, &[t("A", "r", "B")], &[], &[], &GapFillConfig::default()).is_err());
    }
}
