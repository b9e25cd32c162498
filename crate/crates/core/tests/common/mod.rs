#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use tricheck_core::harness::{load_fever_jsonl, Pipeline, PipelineConfig, USchemaRuntime};
use tricheck_core::retrieval::{build_index, load_corpus_jsonl, EvidenceEntry, EvidenceSet, SentenceIndex};
use tricheck_core::uschema::{load_kg_tsv, train, Fact, TrainConfig, USchemaModel};
use tricheck_core::{Claim, EmbeddingProvider, HashedEmbedder, SentenceRef};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn index() -> SentenceIndex {
    build_index(&load_corpus_jsonl(&fixture("corpus.jsonl")).unwrap()).unwrap()
}

pub fn claims() -> Vec<Claim> {
    load_fever_jsonl(&fixture("claims.jsonl")).unwrap()
}

pub fn pipeline() -> Pipeline {
    Pipeline::from_config(&PipelineConfig::load(&fixture("pipeline.toml")).unwrap()).unwrap()
}

pub fn kg() -> Vec<Fact> {
    load_kg_tsv(&fixture("kg.tsv")).unwrap()
}

/// Optimizer settings for the film KG; the default learning rate is tuned for
/// millions of facts and barely moves a model trained on two dozen.
pub fn kg_train_config() -> TrainConfig {
    TrainConfig { learning_rate: 0.05, batch_size: 4, max_epochs: 3, early_stopping: false, seed: 7, ..TrainConfig::default() }
}

pub fn hashed(d: usize) -> Arc<dyn EmbeddingProvider> {
    Arc::new(HashedEmbedder::new(d))
}

pub fn kg_model() -> USchemaModel {
    train(&kg(), &[], hashed(64), &kg_train_config()).unwrap().model
}

/// Universal-schema runtime over the film KG keeping only candidates above 0.9.
pub fn kg_runtime() -> USchemaRuntime {
    let mut rt = USchemaRuntime::new(kg_model(), &kg());
    rt.gap.threshold = 0.9;
    rt.session = kg_train_config();
    rt
}

/// Evidence built from literal sentences of one document.
pub fn evidence(doc: &str, sentences: &[&str]) -> EvidenceSet {
    EvidenceSet::from_entries(
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| EvidenceEntry { sentence: SentenceRef::new(doc, i), text: s.to_string(), score: 1.0 })
            .collect(),
    )
}

pub const MANNING_CLAIM: &str =
    "Manning teaches linguistics, is a member of Stanford, wrote Foundations and was born in Sydney.";
pub const MANNING_EVIDENCE: [&str; 4] = [
    "Manning teaches linguistics.",
    "Manning is a professor of Stanford.",
    "Manning wrote Foundations.",
    "Manning was born in Dresden.",
];
pub const PLUTO_CLAIM: &str = "The Adventures of Pluto Nash was reviewed by Ron Underwood.";
pub const PLUTO_EVIDENCE: [&str; 1] =
    ["The Adventures of Pluto Nash is a comedy film starring Eddie Murphy and directed by Ron Underwood."];
