//! Synthetic fixtures shared by the benchmarks.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tricheck_core::harness::{Pipeline, USchemaRuntime};
use tricheck_core::retrieval::{build_index, Document, SentenceIndex};
use tricheck_core::uschema::{Fact, USchemaModel};
use tricheck_core::{BaselineScorer, Claim, HashedEmbedder, PatternExtractor, VerdictLabel};

const NAMES: &[&str] = &[
    "Ada Lovelace", "Alan Turing", "Grace Hopper", "Marie Curie", "Niels Bohr", "Emmy Noether", "Paul Dirac",
    "Lise Meitner", "Enrico Fermi", "Kurt Godel",
];
const RELATIONS: &[&str] =
    &["was born in", "worked at", "studied", "visited", "wrote about", "is a member of", "lectured at"];
const OBJECTS: &[&str] = &[
    "London", "Cambridge", "Vienna", "Paris", "Princeton", "Berlin", "mathematics", "physics", "chemistry",
    "the Royal Society", "Copenhagen", "Rome",
];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let s = NAMES.choose(rng).unwrap();
    let r1 = RELATIONS.choose(rng).unwrap();
    let o1 = OBJECTS.choose(rng).unwrap();
    if rng.random_bool(0.5) {
        let r2 = RELATIONS.choose(rng).unwrap();
        let o2 = OBJECTS.choose(rng).unwrap();
        format!("{s} {r1} {o1} and {r2} {o2}.")
    } else {
        format!("{s} {r1} {o1}.")
    }
}

/// `docs` documents of `per_doc` generated sentences each.
pub fn corpus(docs: usize, per_doc: usize, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|i| Document { doc_id: format!("doc_{i}"), sentences: (0..per_doc).map(|_| sentence(&mut rng)).collect() })
        .collect()
}

pub fn index(docs: usize, per_doc: usize, seed: u64) -> SentenceIndex {
    build_index(&corpus(docs, per_doc, seed)).expect("generated corpus is non-empty")
}

/// Claims with random gold labels and no gold evidence.
pub fn claims(n: usize, seed: u64) -> Vec<Claim> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = *[VerdictLabel::Supports, VerdictLabel::Refutes, VerdictLabel::Nei].choose(&mut rng).unwrap();
            Claim::new(i as u64 + 1, &sentence(&mut rng)).unwrap().with_gold(label, Vec::new())
        })
        .collect()
}

/// Facts over every name with a random subset of relation/object pairs.
pub fn kg(facts_per_name: usize, seed: u64) -> Vec<Fact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in NAMES {
        for _ in 0..facts_per_name {
            let r = RELATIONS.choose(&mut rng).unwrap();
            let o = OBJECTS.choose(&mut rng).unwrap();
            out.push(Fact::new(name, r, o).unwrap());
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn baseline_pipeline() -> Pipeline {
    Pipeline::new(Arc::new(PatternExtractor::default()), Arc::new(BaselineScorer::default()))
}

/// Baseline pipeline with an untrained universal-schema model over `kg`.
pub fn uschema_pipeline(kg: &[Fact], dim: usize) -> Pipeline {
    let model = USchemaModel::identity(Arc::new(HashedEmbedder::new(dim)));
    let mut rt = USchemaRuntime::new(model, kg);
    rt.session.learning_rate = 0.01;
    baseline_pipeline().with_uschema(rt)
}
