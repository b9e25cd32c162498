//! End-to-end verification of a single claim.

use std::collections::HashSet;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{PipelineConfig, RetrievalSettings, ScorerSettings, USchemaSettings};
use crate::claim::{claim_rule, ClaimRule};
use crate::embedding::{EmbeddingProvider, HashedEmbedder};
use crate::error::{Error, Result};
use crate::extract::{extract_claim, extract_evidence, PatternExtractor, TripleExtractor};
use crate::model::{Claim, ScoredVerdict, SentenceRef, Triple, VerdictLabel};
use crate::nli::{BaselineScorer, ExclusivePairs, NliScorer};
use crate::retrieval::{retrieve_top_k, EvidenceEntry, EvidenceSet, SentenceIndex};
use crate::sidecar::{RemoteEmbedder, RemoteScorer, SidecarClient};
use crate::uschema::{
    fill_gaps_scored, session_update, Fact, FactStore, GapFillConfig, ScoredCandidate, TrainConfig, USchemaModel,
};
use crate::verify::{decide, sample_stream, score_against_evidence, TripleOutcome, VerifyConfig};

/// Loaded universal-schema model plus everything needed to use it per claim.
#[derive(Debug, Clone)]
pub struct USchemaRuntime {
    pub model: USchemaModel,
    /// Known facts that session updates draw negatives from.
    pub pool: FactStore,
    pub gap: GapFillConfig,
    pub session_steps: usize,
    pub session: TrainConfig,
}

impl USchemaRuntime {
    pub fn new(model: USchemaModel, kg: &[Fact]) -> Self {
        Self {
            model,
            pool: FactStore::from_facts(kg),
            gap: GapFillConfig::default(),
            session_steps: 1,
            session: TrainConfig::default(),
        }
    }

    pub fn from_settings(settings: &USchemaSettings, endpoint: Option<&str>) -> Result<Self> {
        let (model, kg) = USchemaModel::load(&settings.model, |id| resolve_provider(id, endpoint))?;
        let mut rt = Self::new(model, &kg);
        rt.gap = GapFillConfig { threshold: settings.threshold, bridge_evidence_relations: settings.bridge_evidence_relations };
        rt.session_steps = settings.session_steps;
        rt.session = settings.session.clone();
        Ok(rt)
    }

    /// Private copy of the model adapted to the facts observed for one claim. Falls back
    /// to an unmodified copy when no negative can be drawn.
    pub fn session_model(&self, observed: &[Fact], seed: u64) -> Result<USchemaModel> {
        match session_update(&self.model, &self.pool, observed, self.session_steps, &self.session, seed) {
            Err(Error::NoNegativeAvailable(_) | Error::TooFewTuples) => Ok(self.model.clone()),
            other => other,
        }
    }
}

/// Resolves a stored provider id: `hashed-bow-<d>` locally, `remote:<model>` through
/// the sidecar at `endpoint`.
pub fn resolve_provider(id: &str, endpoint: Option<&str>) -> Result<Arc<dyn EmbeddingProvider>> {
    if let Some(h) = HashedEmbedder::from_id(id) {
        return Ok(Arc::new(h));
    }
    if id == "remote" || id.starts_with("remote:") {
        let endpoint = endpoint.ok_or_else(|| Error::Config(format!("provider {id:?} needs a sidecar endpoint")))?;
        let remote = RemoteEmbedder::connect(SidecarClient::new(endpoint))?;
        if id != "remote" && remote.id() != id {
            return Err(Error::Config(format!("sidecar serves {:?}, model expects {id:?}", remote.id())));
        }
        return Ok(Arc::new(remote));
    }
    Err(Error::Config(format!("unknown embedding provider {id:?}")))
}

/// Evidence handed to [`Pipeline::verify_claim`].
#[derive(Debug, Clone, Copy)]
pub enum EvidenceInput<'a> {
    /// Use these sentences as they are.
    Given(&'a EvidenceSet),
    /// Retrieve the top sentences from an index.
    Retrieve(&'a SentenceIndex),
}

/// How evidence is chosen for each claim during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceRegime {
    /// Gold sentences for Supports/Refutes claims, random sentences for NEI claims.
    GoldRandom,
    /// Gold sentences for Supports/Refutes claims, retrieved sentences for NEI claims.
    GoldRetrieved,
    /// Retrieved sentences for every claim.
    Retrieved,
}

impl EvidenceRegime {
    pub const ALL: [EvidenceRegime; 3] = [EvidenceRegime::GoldRandom, EvidenceRegime::GoldRetrieved, EvidenceRegime::Retrieved];

    pub fn as_str(&self) -> &'static str {
        match self {
            EvidenceRegime::GoldRandom => "gold-random",
            EvidenceRegime::GoldRetrieved => "gold-retrieved",
            EvidenceRegime::Retrieved => "retrieved",
        }
    }
}

impl std::str::FromStr for EvidenceRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown evidence regime {s:?}")))
    }
}

/// Verification record for one claim triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleTrace {
    pub triple: Triple,
    /// Verification against extracted evidence triples.
    pub first: TripleOutcome,
    /// Universal-schema candidates used for re-verification.
    #[serde(default)]
    pub filled: Vec<ScoredCandidate>,
    /// Re-verification with the candidates added, when it happened.
    #[serde(default)]
    pub second: Option<TripleOutcome>,
    pub label: VerdictLabel,
}

/// Everything that went into one claim verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimTrace {
    pub claim_id: u64,
    pub claim: String,
    #[serde(default)]
    pub gold_label: Option<VerdictLabel>,
    pub evidence: Vec<EvidenceEntry>,
    pub evidence_triples: Vec<Triple>,
    pub triples: Vec<TripleTrace>,
    pub rule: ClaimRule,
    pub verdict: VerdictLabel,
}

impl ClaimTrace {
    pub fn evidence_refs(&self) -> HashSet<&SentenceRef> {
        self.evidence.iter().map(|e| &e.sentence).collect()
    }
}

/// A universal-schema candidate with its entailment verdict against the claim triple.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateVerdict {
    pub candidate: ScoredCandidate,
    pub verdict: ScoredVerdict,
}

/// Threshold-independent scores for one claim triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleScores {
    pub triple: Triple,
    pub scored: Vec<ScoredVerdict>,
    /// Every candidate regardless of its probability, in gap-filling order.
    pub candidates: Vec<CandidateVerdict>,
}

/// Threshold-independent scores for a whole claim, reusable across threshold settings.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimScores {
    pub claim: Claim,
    pub evidence: EvidenceSet,
    pub evidence_triples: Vec<Triple>,
    pub triples: Vec<TripleScores>,
}

impl ClaimScores {
    /// Claim verdict under the given thresholds. `uschema_threshold` of `None` disables
    /// gap filling.
    pub fn decide(&self, cfg: &VerifyConfig, uschema_threshold: Option<f64>) -> ClaimTrace {
        let triples = self
            .triples
            .iter()
            .enumerate()
            .map(|(i, ts)| {
                let first = decide(ts.scored.clone(), cfg, sample_stream(self.claim.id, i, 0));
                let kept = match uschema_threshold {
                    Some(t) if first.label == VerdictLabel::Nei => {
                        ts.candidates.iter().filter(|c| c.candidate.probability >= t).cloned().collect()
                    }
                    _ => Vec::new(),
                };
                finish_triple(&self.claim, i, ts.triple.clone(), first, kept, cfg)
            })
            .collect();
        assemble(&self.claim, &self.evidence, self.evidence_triples.clone(), triples)
    }
}

fn finish_triple(
    claim: &Claim,
    index: usize,
    triple: Triple,
    first: TripleOutcome,
    candidates: Vec<CandidateVerdict>,
    cfg: &VerifyConfig,
) -> TripleTrace {
    if candidates.is_empty() {
        let label = first.label;
        return TripleTrace { triple, first, filled: Vec::new(), second: None, label };
    }
    let mut scored = first.scored.clone();
    let mut filled = Vec::with_capacity(candidates.len());
    for c in candidates {
        scored.push(c.verdict);
        filled.push(c.candidate);
    }
    let second = decide(scored, cfg, sample_stream(claim.id, index, 1));
    let label = second.label;
    TripleTrace { triple, first, filled, second: Some(second), label }
}

fn assemble(claim: &Claim, evidence: &EvidenceSet, evidence_triples: Vec<Triple>, triples: Vec<TripleTrace>) -> ClaimTrace {
    let labels: Vec<VerdictLabel> = triples.iter().map(|t| t.label).collect();
    let rule = claim_rule(&labels);
    ClaimTrace {
        claim_id: claim.id,
        claim: claim.text.clone(),
        gold_label: claim.gold_label,
        evidence: evidence.entries.clone(),
        evidence_triples,
        triples,
        rule,
        verdict: rule.verdict(),
    }
}

/// Extraction, verification, optional gap filling and claim aggregation.
#[derive(Clone)]
pub struct Pipeline {
    pub verify: VerifyConfig,
    pub retrieval: RetrievalSettings,
    extractor: Arc<dyn TripleExtractor>,
    scorer: Arc<dyn NliScorer>,
    embedder: Option<Arc<dyn EmbeddingProvider>>,
    uschema: Option<Arc<USchemaRuntime>>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("verify", &self.verify)
            .field("retrieval", &self.retrieval)
            .field("uschema", &self.uschema.as_ref().map(|u| &u.gap))
            .finish_non_exhaustive()
    }
}

impl Pipeline {
    pub fn new(extractor: Arc<dyn TripleExtractor>, scorer: Arc<dyn NliScorer>) -> Self {
        Self {
            verify: VerifyConfig::default(),
            retrieval: RetrievalSettings::default(),
            extractor,
            scorer,
            embedder: None,
            uschema: None,
        }
    }

    /// Builds every component named in `cfg`. Remote components are contacted here.
    pub fn from_config(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let extractor = Arc::new(PatternExtractor::new(cfg.extractor.build()?)?);
        let (scorer, endpoint): (Arc<dyn NliScorer>, Option<&str>) = match &cfg.scorer {
            ScorerSettings::Baseline { exclusive_pairs } => {
                let pairs = match exclusive_pairs {
                    Some(p) => ExclusivePairs::load(p)?,
                    None => ExclusivePairs::default(),
                };
                (Arc::new(BaselineScorer::new(pairs)), None)
            }
            ScorerSettings::Remote { endpoint } => {
                let client = SidecarClient::new(endpoint);
                client.health()?;
                (Arc::new(RemoteScorer::new(client)), Some(endpoint.as_str()))
            }
        };
        let mut p = Self::new(extractor, scorer);
        p.verify = cfg.verify;
        p.retrieval = cfg.retrieval.clone();
        if let Some(id) = &cfg.retrieval.embedder {
            p.embedder = Some(resolve_provider(id, endpoint)?);
        }
        if let Some(u) = &cfg.uschema {
            p.uschema = Some(Arc::new(USchemaRuntime::from_settings(u, endpoint)?));
        }
        Ok(p)
    }

    pub fn with_verify(mut self, verify: VerifyConfig) -> Self {
        self.verify = verify;
        self
    }

    pub fn with_retrieval(mut self, retrieval: RetrievalSettings) -> Self {
        self.retrieval = retrieval;
        self
    }

    pub fn with_embedder(mut self, embedder: Arc<dyn EmbeddingProvider>) -> Self {
        self.embedder = Some(embedder);
        self
    }

    pub fn with_uschema(mut self, runtime: USchemaRuntime) -> Self {
        self.uschema = Some(Arc::new(runtime));
        self
    }

    pub fn without_uschema(mut self) -> Self {
        self.uschema = None;
        self
    }

    pub fn uschema(&self) -> Option<&USchemaRuntime> {
        self.uschema.as_deref()
    }

    /// Copy with different thresholds; `uschema_threshold` is ignored without a model.
    pub fn with_thresholds(&self, supports: f64, refutes: f64, uschema_threshold: f64) -> Self {
        let mut p = self.clone();
        p.verify.threshold_supports = supports;
        p.verify.threshold_refutes = refutes;
        if let Some(rt) = &self.uschema {
            let mut rt = (**rt).clone();
            rt.gap.threshold = uschema_threshold;
            p.uschema = Some(Arc::new(rt));
        }
        p
    }

    pub fn scorer(&self) -> &dyn NliScorer {
        self.scorer.as_ref()
    }

    pub fn extractor(&self) -> &dyn TripleExtractor {
        self.extractor.as_ref()
    }

    pub fn retrieve(&self, claim: &Claim, index: &SentenceIndex) -> Result<EvidenceSet> {
        retrieve_top_k(claim, index, self.retrieval.k, self.retrieval.mode, self.embedder.as_deref())
    }

    fn evidence_for(&self, claim: &Claim, input: EvidenceInput<'_>) -> Result<EvidenceSet> {
        match input {
            EvidenceInput::Given(set) => Ok(set.clone()),
            EvidenceInput::Retrieve(index) => self.retrieve(claim, index),
        }
    }

    /// Evidence for `claim` under an evaluation regime.
    pub fn regime_evidence(&self, claim: &Claim, index: &SentenceIndex, regime: EvidenceRegime) -> Result<EvidenceSet> {
        let has_gold = matches!(claim.gold_label, Some(VerdictLabel::Supports | VerdictLabel::Refutes));
        match regime {
            EvidenceRegime::Retrieved => self.retrieve(claim, index),
            EvidenceRegime::GoldRandom | EvidenceRegime::GoldRetrieved if has_gold => gold_evidence(claim, index),
            EvidenceRegime::GoldRandom => Ok(random_evidence(claim, index, self.retrieval.k, self.verify.seed)),
            EvidenceRegime::GoldRetrieved => self.retrieve(claim, index),
        }
    }

    fn observed_facts(evidence_triples: &[Triple]) -> Vec<Fact> {
        evidence_triples.iter().filter(|t| !t.is_unary()).map(Fact::from_triple).collect()
    }

    fn session_seed(&self, claim: &Claim) -> u64 {
        self.uschema.as_ref().map_or(0, |u| u.session.seed).wrapping_add(claim.id)
    }

    /// Verifies one claim and records how the verdict was reached.
    pub fn verify_claim(&self, claim: &Claim, input: EvidenceInput<'_>) -> Result<ClaimTrace> {
        let evidence = self.evidence_for(claim, input)?;
        let claim_triples = extract_claim(claim, self.extractor.as_ref());
        let evidence_triples = extract_evidence(&evidence, self.extractor.as_ref());

        let mut firsts = Vec::with_capacity(claim_triples.len());
        for (i, t) in claim_triples.iter().enumerate() {
            let scored = score_against_evidence(t, &evidence_triples, self.scorer.as_ref())?;
            firsts.push(decide(scored, &self.verify, sample_stream(claim.id, i, 0)));
        }
        let labels: Vec<VerdictLabel> = firsts.iter().map(|o| o.label).collect();

        let mut filled: Vec<Vec<CandidateVerdict>> = vec![Vec::new(); claim_triples.len()];
        if let Some(rt) = self.uschema.as_deref().filter(|_| labels.contains(&VerdictLabel::Nei)) {
            let model = rt.session_model(&Self::observed_facts(&evidence_triples), self.session_seed(claim))?;
            let cands = fill_gaps_scored(&model, &claim_triples, &evidence_triples, &labels, &rt.gap)?;
            for (i, c) in cands.into_iter().enumerate() {
                filled[i] = self.judge_candidates(&claim_triples[i], c)?;
            }
        }

        let triples = claim_triples
            .into_iter()
            .zip(firsts)
            .zip(filled)
            .enumerate()
            .map(|(i, ((t, first), cands))| finish_triple(claim, i, t, first, cands, &self.verify))
            .collect();
        Ok(assemble(claim, &evidence, evidence_triples, triples))
    }

    /// Scores everything that does not depend on the thresholds, including every
    /// universal-schema candidate for every claim triple.
    pub fn score_claim(&self, claim: &Claim, input: EvidenceInput<'_>) -> Result<ClaimScores> {
        let evidence = self.evidence_for(claim, input)?;
        let claim_triples = extract_claim(claim, self.extractor.as_ref());
        let evidence_triples = extract_evidence(&evidence, self.extractor.as_ref());

        let mut candidates: Vec<Vec<CandidateVerdict>> = vec![Vec::new(); claim_triples.len()];
        if let Some(rt) = self.uschema.as_deref().filter(|_| !claim_triples.is_empty()) {
            let model = rt.session_model(&Self::observed_facts(&evidence_triples), self.session_seed(claim))?;
            let all_nei = vec![VerdictLabel::Nei; claim_triples.len()];
            let gap = GapFillConfig { threshold: 0.0, ..rt.gap.clone() };
            let cands = fill_gaps_scored(&model, &claim_triples, &evidence_triples, &all_nei, &gap)?;
            for (i, c) in cands.into_iter().enumerate() {
                candidates[i] = self.judge_candidates(&claim_triples[i], c)?;
            }
        }

        let mut triples = Vec::with_capacity(claim_triples.len());
        for (t, cands) in claim_triples.into_iter().zip(candidates) {
            let scored = score_against_evidence(&t, &evidence_triples, self.scorer.as_ref())?;
            triples.push(TripleScores { triple: t, scored, candidates: cands });
        }
        Ok(ClaimScores { claim: claim.clone(), evidence, evidence_triples, triples })
    }

    fn judge_candidates(&self, claim_triple: &Triple, cands: Vec<ScoredCandidate>) -> Result<Vec<CandidateVerdict>> {
        let as_triples: Vec<Triple> = cands.iter().map(|c| c.fact.to_triple()).collect::<Result<_>>()?;
        let as_triples: Vec<Triple> = as_triples
            .into_iter()
            .map(|t| t.with_provenance(crate::model::Provenance::UniversalSchema))
            .collect();
        let verdicts = score_against_evidence(claim_triple, &as_triples, self.scorer.as_ref())?;
        Ok(cands.into_iter().zip(verdicts).map(|(candidate, verdict)| CandidateVerdict { candidate, verdict }).collect())
    }

    /// Threshold currently applied to universal-schema candidates, if enabled.
    pub fn uschema_threshold(&self) -> Option<f64> {
        self.uschema.as_ref().map(|u| u.gap.threshold)
    }
}

/// Every sentence of every gold group, looked up in the index.
pub fn gold_evidence(claim: &Claim, index: &SentenceIndex) -> Result<EvidenceSet> {
    let mut refs: Vec<&SentenceRef> = claim.gold_evidence.iter().flatten().flatten().collect();
    refs.sort();
    refs.dedup();
    let entries = refs
        .into_iter()
        .map(|r| {
            let id = index.find(r).ok_or_else(|| Error::UnknownGoldSentence(r.clone()))?;
            let s = &index.sentences()[id];
            Ok(EvidenceEntry { sentence: s.sentence.clone(), text: s.text.clone(), score: 1.0 })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvidenceSet::from_entries(entries))
}

/// `k` sentences drawn uniformly without replacement from those outside the claim's
/// gold groups. The draw depends only on `seed` and the claim id.
pub fn random_evidence(claim: &Claim, index: &SentenceIndex, k: usize, seed: u64) -> EvidenceSet {
    let gold: HashSet<&SentenceRef> = claim.gold_evidence.iter().flatten().flatten().collect();
    let pool: Vec<usize> = (0..index.len()).filter(|&i| !gold.contains(&index.sentences()[i].sentence)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(claim.id);
    let picked = rand::seq::index::sample(&mut rng, pool.len(), k.min(pool.len()));
    let entries = picked
        .into_iter()
        .map(|j| {
            let s = &index.sentences()[pool[j]];
            EvidenceEntry { sentence: s.sentence.clone(), text: s.text.clone(), score: 0.0 }
        })
        .collect();
    EvidenceSet::from_entries(entries)
}
