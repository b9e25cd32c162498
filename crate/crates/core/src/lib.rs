//! Claim verification over semantic triples.
//!
//! Claims and evidence sentences are decomposed into `<subject, relation, object>`
//! triples, each claim triple is checked against evidence triples with an NLI scorer,
//! and claim triples left undecided can be retried against facts proposed by a
//! universal-schema link-prediction model.

pub mod claim;
pub mod embedding;
pub mod error;
pub mod extract;
pub mod harness;
pub mod model;
pub mod nli;
pub mod retrieval;
pub mod sidecar;
pub mod text;
pub mod uschema;
pub mod verify;

pub use claim::{aggregate_claim, claim_rule, ClaimRule};
pub use embedding::{EmbeddingProvider, HashedEmbedder};
pub use error::{Error, Result};
pub use extract::{ExtractorConfig, PatternExtractor, TripleExtractor};
pub use model::{
    CharSpan, Claim, EvidenceGroup, FieldSpans, Provenance, ScoredVerdict, SentenceRef, SourceRef, Triple, VerdictLabel,
};
pub use nli::{BaselineScorer, ExclusivePairs, NliDistribution, NliRequest, NliScorer};
pub use retrieval::{Document, EvidenceEntry, EvidenceSet, RetrievalMode, SentenceIndex};
pub use sidecar::{RemoteEmbedder, RemoteScorer, SidecarClient};
pub use uschema::{Fact, USchemaModel};
pub use verify::{VerifyConfig, Voting};
pub use harness::{EvidenceRegime, MetricsReport, Pipeline, PipelineConfig};
