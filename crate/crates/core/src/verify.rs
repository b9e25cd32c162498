//! Triple-level verification: score a claim triple against every evidence triple,
//! drop unreliable verdicts, and vote.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ScoredVerdict, Triple, VerdictLabel};
use crate::nli::{make_nli_input, map_nli_label, NliScorer};
use crate::text::fnv1a64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Voting {
    /// Label of the single most probable verdict.
    #[default]
    Max,
    /// Most frequent label.
    Majority,
    /// Samples a label with probability proportional to its best verdict.
    WeightedSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub threshold_supports: f64,
    pub threshold_refutes: f64,
    pub voting: Voting,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { threshold_supports: 0.5, threshold_refutes: 0.5, voting: Voting::Max, seed: 0 }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("supports", self.threshold_supports), ("refutes", self.threshold_refutes)] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Config(format!("{name} threshold {t} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Identifies the random substream used by weighted sampling for one claim triple.
///
/// `pass` distinguishes the first verification from re-verification with filled triples.
pub fn sample_stream(claim_id: u64, triple_index: usize, pass: u32) -> u64 {
    let mut bytes = [0u8; 20];
    bytes[..8].copy_from_slice(&claim_id.to_le_bytes());
    bytes[8..16].copy_from_slice(&(triple_index as u64).to_le_bytes());
    bytes[16..].copy_from_slice(&pass.to_le_bytes());
    fnv1a64(&bytes)
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One verdict per evidence triple, in evidence order.
pub fn score_against_evidence(
    claim_triple: &Triple,
    evidence: &[Triple],
    scorer: &dyn NliScorer,
) -> Result<Vec<ScoredVerdict>> {
    if evidence.is_empty() {
        return Ok(Vec::new());
    }
    let batch: Vec<_> = evidence.iter().map(|e| make_nli_input(e, claim_triple)).collect();
    let dists = scorer.classify(&batch)?;
    if dists.len() != evidence.len() {
        return Err(Error::Protocol(format!("scorer returned {} results for {} pairs", dists.len(), evidence.len())));
    }
    evidence
        .iter()
        .zip(dists)
        .map(|(e, d)| {
            let (label, probability) = map_nli_label(&d);
            ScoredVerdict::new(label, probability, e.clone())
        })
        .collect()
}

/// Keeps Supports and Refutes verdicts at or above their thresholds. NEI verdicts are
/// always dropped.
pub fn filter_by_thresholds(verdicts: &[ScoredVerdict], cfg: &VerifyConfig) -> Vec<ScoredVerdict> {
    verdicts.iter().filter(|v| passes(v, cfg)).cloned().collect()
}

fn passes(v: &ScoredVerdict, cfg: &VerifyConfig) -> bool {
    match v.label {
        VerdictLabel::Supports => v.probability >= cfg.threshold_supports,
        VerdictLabel::Refutes => v.probability >= cfg.threshold_refutes,
        VerdictLabel::Nei => false,
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct LabelTally {
    count: usize,
    max_probability: f64,
}

fn tally(verdicts: &[ScoredVerdict]) -> [LabelTally; 3] {
    let mut t = [LabelTally::default(); 3];
    for v in verdicts {
        let slot = &mut t[v.label.index()];
        slot.count += 1;
        slot.max_probability = slot.max_probability.max(v.probability);
    }
    t
}

/// Collapses surviving verdicts into one label. No survivors means NEI.
///
/// `stream` selects the random substream for weighted sampling (see [`sample_stream`]).
pub fn aggregate_votes(filtered: &[ScoredVerdict], cfg: &VerifyConfig, stream: u64) -> VerdictLabel {
    if filtered.is_empty() {
        return VerdictLabel::Nei;
    }
    let t = tally(filtered);
    let present = || VerdictLabel::ALL.into_iter().filter(|l| t[l.index()].count > 0);
    match cfg.voting {
        Voting::Max => {
            // ALL is in tie-break order, so strict comparison keeps the cautious label
            let mut best: Option<VerdictLabel> = None;
            for l in present() {
                if best.is_none_or(|b| t[l.index()].max_probability > t[b.index()].max_probability) {
                    best = Some(l);
                }
            }
            best.unwrap_or(VerdictLabel::Nei)
        }
        Voting::Majority => {
            let mut best: Option<VerdictLabel> = None;
            for l in present() {
                let better = best.is_none_or(|b| {
                    let (x, y) = (t[l.index()], t[b.index()]);
                    x.count > y.count || (x.count == y.count && x.max_probability > y.max_probability)
                });
                if better {
                    best = Some(l);
                }
            }
            best.unwrap_or(VerdictLabel::Nei)
        }
        Voting::WeightedSampling => {
            let total: f64 = VerdictLabel::ALL.iter().map(|l| t[l.index()].max_probability).sum();
            let first = present().next().unwrap_or(VerdictLabel::Nei);
            if total <= 0.0 {
                return first;
            }
            let mut rng = stream_rng(cfg.seed, stream);
            let draw = rng.random::<f64>() * total;
            let mut acc = 0.0;
            for l in present() {
                acc += t[l.index()].max_probability;
                if draw < acc {
                    return l;
                }
            }
            present().next_back().unwrap_or(first)
        }
    }
}

/// Full record of verifying one claim triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleOutcome {
    pub scored: Vec<ScoredVerdict>,
    pub kept: Vec<ScoredVerdict>,
    pub label: VerdictLabel,
}

pub fn verify_triple_detailed(
    claim_triple: &Triple,
    evidence: &[Triple],
    scorer: &dyn NliScorer,
    cfg: &VerifyConfig,
    stream: u64,
) -> Result<TripleOutcome> {
    let scored = score_against_evidence(claim_triple, evidence, scorer)?;
    Ok(decide(scored, cfg, stream))
}

/// Filters and votes over already-scored verdicts.
pub fn decide(scored: Vec<ScoredVerdict>, cfg: &VerifyConfig, stream: u64) -> TripleOutcome {
    let kept = filter_by_thresholds(&scored, cfg);
    let label = aggregate_votes(&kept, cfg, stream);
    TripleOutcome { scored, kept, label }
}

pub fn verify_triple(
    claim_triple: &Triple,
    evidence: &[Triple],
    scorer: &dyn NliScorer,
    cfg: &VerifyConfig,
    stream: u64,
) -> Result<VerdictLabel> {
    verify_triple_detailed(claim_triple, evidence, scorer, cfg, stream).map(|o| o.label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nli::BaselineScorer;
    use VerdictLabel::*;

    fn sv(label: VerdictLabel, p: f64) -> ScoredVerdict {
        ScoredVerdict::new(label, p, Triple::new("s", "r", "o").unwrap()).unwrap()
    }

    fn cfg(ts: f64, tr: f64, voting: Voting) -> VerifyConfig {
        VerifyConfig { threshold_supports: ts, threshold_refutes: tr, voting, seed: 7 }
    }

    #[test]
    fn empty_evidence_scores_nothing() {
        let c = Triple::new("a", "b", "c").unwrap();
        assert!(score_against_evidence(&c, &[], &BaselineScorer::default()).unwrap().is_empty());
        let label = verify_triple(&c, &[], &BaselineScorer::default(), &VerifyConfig::default(), 0).unwrap();
        assert_eq!(label, Nei);
    }

    #[test]
    fn identical_evidence_supports() {
        let c = Triple::new("Barack Obama", "was born in", "Hawaii").unwrap();
        let scored = score_against_evidence(&c, std::slice::from_ref(&c), &BaselineScorer::default()).unwrap();
        assert_eq!(scored.len(), 1);
        assert_eq!(scored[0].label, Supports);
        assert!(scored[0].probability >= 0.97);
        let label = verify_triple(&c, std::slice::from_ref(&c), &BaselineScorer::default(), &cfg(0.5, 0.5, Voting::Max), 0).unwrap();
        assert_eq!(label, Supports);
    }

    // Linearized pair: "Manning is a professor of Stanford" vs "Manning is a member of
    // Stanford". Token sets share {manning, is, a, of, stanford}; union adds
    // {professor, member}: J = 5/7. No conflict, so entailment = 0.01 + 0.97 * 5/7.
    #[test]
    fn manning_pair_by_jaccard() {
        let c = Triple::new("Manning", "is a member of", "Stanford").unwrap();
        let e = Triple::new("Manning", "is a professor of", "Stanford").unwrap();
        let scored = score_against_evidence(&c, &[e], &BaselineScorer::default()).unwrap();
        assert_eq!(scored[0].label, Supports);
        assert!((scored[0].probability - (0.01 + 0.97 * 5.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn threshold_filtering() {
        let v = vec![sv(Supports, 0.6), sv(Refutes, 0.7), sv(Nei, 0.9)];
        let kept = filter_by_thresholds(&v, &cfg(0.5, 0.8, Voting::Max));
        assert_eq!(kept, vec![sv(Supports, 0.6)]);
        let kept = filter_by_thresholds(&v, &cfg(0.0, 0.0, Voting::Max));
        assert_eq!(kept, vec![sv(Supports, 0.6), sv(Refutes, 0.7)]);
        let v = vec![sv(Supports, 1.0), sv(Supports, 0.99), sv(Refutes, 1.0)];
        assert_eq!(filter_by_thresholds(&v, &cfg(1.0, 1.0, Voting::Max)).len(), 2);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(cfg(1.01, 0.5, Voting::Max).validate().is_err());
        assert!(cfg(0.5, -0.1, Voting::Max).validate().is_err());
        assert!(cfg(1.0, 0.0, Voting::Max).validate().is_ok());
    }

    #[test]
    fn empty_votes_are_nei() {
        for voting in [Voting::Max, Voting::Majority, Voting::WeightedSampling] {
            assert_eq!(aggregate_votes(&[], &cfg(0.0, 0.0, voting), 0), Nei);
        }
    }

    #[test]
    fn max_versus_majority() {
        let v = vec![sv(Supports, 0.8), sv(Supports, 0.7), sv(Refutes, 0.9)];
        assert_eq!(aggregate_votes(&v, &cfg(0.0, 0.0, Voting::Max), 0), Refutes);
        assert_eq!(aggregate_votes(&v, &cfg(0.0, 0.0, Voting::Majority), 0), Supports);
    }

    #[test]
    fn ties_prefer_caution() {
        let v = vec![sv(Supports, 0.8), sv(Refutes, 0.8)];
        assert_eq!(aggregate_votes(&v, &cfg(0.0, 0.0, Voting::Max), 0), Refutes);
        assert_eq!(aggregate_votes(&v, &cfg(0.0, 0.0, Voting::Majority), 0), Refutes);
        let v = vec![sv(Supports, 0.9), sv(Refutes, 0.8)];
        assert_eq!(aggregate_votes(&v, &cfg(0.0, 0.0, Voting::Majority), 0), Supports);
    }

    #[test]
    fn weighted_sampling_is_seeded() {
        let v = vec![sv(Supports, 0.8), sv(Refutes, 0.4)];
        let c = cfg(0.0, 0.0, Voting::WeightedSampling);
        for stream in 0..50 {
            assert_eq!(aggregate_votes(&v, &c, stream), aggregate_votes(&v, &c, stream));
        }
        let supports = (0..100_000u64).filter(|&s| aggregate_votes(&v, &c, s) == Supports).count();
        let freq = supports as f64 / 100_000.0;
        assert!((freq - 2.0 / 3.0).abs() < 0.01, "{freq}");
    }

    #[test]
    fn streams_differ_per_triple() {
        assert_ne!(sample_stream(1, 0, 0), sample_stream(1, 1, 0));
        assert_ne!(sample_stream(1, 0, 0), sample_stream(2, 0, 0));
        assert_ne!(sample_stream(1, 0, 0), sample_stream(1, 0, 1));
    }
}
