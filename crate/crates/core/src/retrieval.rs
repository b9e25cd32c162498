//! Sentence-level evidence retrieval.
//!
//! Sentences are scored by cosine similarity of sublinear tf-idf vectors,
//! `(1 + ln tf) * ln(N / df)`, optionally multiplied by the cosine similarity of
//! sentence embeddings.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, EmbeddingProvider};
use crate::error::{Error, Result};
use crate::model::{Claim, SentenceRef};
use crate::text::word_tokens;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    #[default]
    TfIdfOnly,
    CosineOnly,
    Product,
}

impl RetrievalMode {
    pub fn needs_embedder(&self) -> bool {
        !matches!(self, RetrievalMode::TfIdfOnly)
    }
}

/// One document of the corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub sentences: Vec<String>,
}

/// Reads a corpus file with one `{"doc_id": ..., "sentences": [...]}` object per line.
pub fn load_corpus_jsonl(path: &Path) -> Result<Vec<Document>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        docs.push(doc);
    }
    Ok(docs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedSentence {
    pub sentence: SentenceRef,
    pub text: String,
}

/// Immutable tf-idf index over corpus sentences.
///
/// Sentences without any word token are not indexed. A sentence whose terms all occur
/// in every sentence has a zero vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SentenceIndex {
    vocabulary: BTreeMap<String, u32>,
    doc_freq: Vec<u32>,
    /// Sparse vectors sorted by term id.
    vectors: Vec<Vec<(u32, f64)>>,
    sentences: Vec<IndexedSentence>,
    #[serde(skip)]
    lookup: HashMap<SentenceRef, usize>,
}

fn term_counts(tokens: &[String]) -> BTreeMap<&str, u32> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t.as_str()).or_insert(0) += 1;
    }
    counts
}

fn sublinear_tf(tf: u32) -> f64 {
    1.0 + f64::from(tf).ln()
}

fn normalize(v: &mut [(u32, f64)]) {
    let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|(_, w)| *w /= norm);
    }
}

fn sparse_dot(a: &[(u32, f64)], b: &[(u32, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

impl SentenceIndex {
    pub fn build(documents: &[Document]) -> Result<Self> {
        let mut sentences = Vec::new();
        let mut tokenized = Vec::new();
        for doc in documents {
            for (i, text) in doc.sentences.iter().enumerate() {
                let tokens = word_tokens(text);
                if tokens.is_empty() {
                    continue;
                }
                sentences.push(IndexedSentence { sentence: SentenceRef::new(&doc.doc_id, i), text: text.clone() });
                tokenized.push(tokens);
            }
        }
        if sentences.is_empty() {
            return Err(Error::EmptyCorpus);
        }

        // term ids follow lexicographic order so the index is independent of insertion order
        let mut df_by_term: BTreeMap<String, u32> = BTreeMap::new();
        for tokens in &tokenized {
            for term in term_counts(tokens).keys() {
                *df_by_term.entry((*term).to_string()).or_insert(0) += 1;
            }
        }
        let vocabulary: BTreeMap<String, u32> =
            df_by_term.keys().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let doc_freq: Vec<u32> = df_by_term.values().copied().collect();

        let n = sentences.len() as f64;
        let vectors = tokenized
            .iter()
            .map(|tokens| {
                let mut v: Vec<(u32, f64)> = term_counts(tokens)
                    .into_iter()
                    .map(|(term, tf)| {
                        let id = vocabulary[term];
                        (id, sublinear_tf(tf) * (n / f64::from(doc_freq[id as usize])).ln())
                    })
                    .collect();
                v.sort_by_key(|(id, _)| *id);
                normalize(&mut v);
                v
            })
            .collect();

        let mut index = Self { vocabulary, doc_freq, vectors, sentences, lookup: HashMap::new() };
        index.rebuild_lookup();
        Ok(index)
    }

    fn rebuild_lookup(&mut self) {
        self.lookup = self.sentences.iter().enumerate().map(|(i, s)| (s.sentence.clone(), i)).collect();
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, id: usize) -> Option<&IndexedSentence> {
        self.sentences.get(id)
    }

    pub fn sentences(&self) -> &[IndexedSentence] {
        &self.sentences
    }

    /// Sentence id for a document/sentence reference.
    pub fn find(&self, sref: &SentenceRef) -> Option<usize> {
        self.lookup.get(sref).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.vocabulary.get(term).map(|id| self.doc_freq[*id as usize])
    }

    /// Stored tf-idf weight of `term` in sentence `id` (after normalization).
    pub fn weight(&self, id: usize, term: &str) -> Option<f64> {
        let term_id = *self.vocabulary.get(term)?;
        let v = self.vectors.get(id)?;
        v.binary_search_by_key(&term_id, |(t, _)| *t).ok().map(|k| v[k].1)
    }

    /// Normalized tf-idf vector of arbitrary text; unknown terms are ignored.
    pub fn query_vector(&self, text: &str) -> Vec<(u32, f64)> {
        let tokens = word_tokens(text);
        let n = self.sentences.len() as f64;
        let mut v: Vec<(u32, f64)> = term_counts(&tokens)
            .into_iter()
            .filter_map(|(term, tf)| {
                let id = *self.vocabulary.get(term)?;
                Some((id, sublinear_tf(tf) * (n / f64::from(self.doc_freq[id as usize])).ln()))
            })
            .collect();
        v.sort_by_key(|(id, _)| *id);
        normalize(&mut v);
        v
    }

    fn tfidf_cosine(&self, query: &[(u32, f64)], id: usize) -> f64 {
        sparse_dot(query, &self.vectors[id]).clamp(0.0, 1.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut index: Self = serde_json::from_str(&text)?;
        index.rebuild_lookup();
        Ok(index)
    }
}

pub fn build_index(documents: &[Document]) -> Result<SentenceIndex> {
    SentenceIndex::build(documents)
}

fn semantic_factor(a: &[f64], b: &[f64]) -> f64 {
    cosine(a, b).clamp(0.0, 1.0)
}

/// Score of one indexed sentence for `query`, in `[0, 1]`.
pub fn score_sentence(
    query: &str,
    sentence_id: usize,
    index: &SentenceIndex,
    mode: RetrievalMode,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<f64> {
    let sentence = index.sentence(sentence_id).ok_or(Error::UnknownSentence(sentence_id))?;
    let embed_cos = || -> Result<f64> {
        let embedder = embedder.ok_or(Error::MissingEmbedder(mode))?;
        let v = embedder.embed(&[query, &sentence.text])?;
        Ok(semantic_factor(&v[0], &v[1]))
    };
    match mode {
        RetrievalMode::TfIdfOnly => Ok(index.tfidf_cosine(&index.query_vector(query), sentence_id)),
        RetrievalMode::CosineOnly => embed_cos(),
        RetrievalMode::Product => {
            let sem = embed_cos()?;
            Ok(index.tfidf_cosine(&index.query_vector(query), sentence_id) * sem)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub sentence: SentenceRef,
    pub text: String,
    pub score: f64,
}

/// Ranked evidence sentences: score descending, then document id and sentence index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvidenceSet {
    pub entries: Vec<EvidenceEntry>,
}

impl EvidenceSet {
    pub fn from_entries(mut entries: Vec<EvidenceEntry>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.sentence.cmp(&b.sentence)));
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn refs(&self) -> impl Iterator<Item = &SentenceRef> {
        self.entries.iter().map(|e| &e.sentence)
    }
}

/// Top `k` sentences for the claim text.
pub fn retrieve_top_k(
    claim: &Claim,
    index: &SentenceIndex,
    k: usize,
    mode: RetrievalMode,
    embedder: Option<&dyn EmbeddingProvider>,
) -> Result<EvidenceSet> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let query = claim.text.as_str();
    let n = index.len();
    let tfidf: Vec<f64> = if mode == RetrievalMode::CosineOnly {
        Vec::new()
    } else {
        let q = index.query_vector(query);
        (0..n).map(|id| index.tfidf_cosine(&q, id)).collect()
    };

    let scores: Vec<f64> = match mode {
        RetrievalMode::TfIdfOnly => tfidf,
        RetrievalMode::CosineOnly | RetrievalMode::Product => {
            let embedder = embedder.ok_or(Error::MissingEmbedder(mode))?;
            // in product mode only sentences with lexical overlap can score above zero
            let ids: Vec<usize> = match mode {
                RetrievalMode::Product => (0..n).filter(|&id| tfidf[id] > 0.0).collect(),
                _ => (0..n).collect(),
            };
            let mut texts: Vec<&str> = vec![query];
            texts.extend(ids.iter().map(|&id| index.sentences[id].text.as_str()));
            let vecs = embedder.embed(&texts)?;
            let mut scores = vec![0.0; n];
            for (slot, &id) in ids.iter().enumerate() {
                let sem = semantic_factor(&vecs[0], &vecs[slot + 1]);
                scores[id] = if mode == RetrievalMode::Product { tfidf[id] * sem } else { sem };
            }
            scores
        }
    };

    let entries = scores
        .into_iter()
        .enumerate()
        .map(|(id, score)| {
            let s = &index.sentences[id];
            EvidenceEntry { sentence: s.sentence.clone(), text: s.text.clone(), score }
        })
        .collect();
    let mut set = EvidenceSet::from_entries(entries);
    set.entries.truncate(k);
    Ok(set)
}
