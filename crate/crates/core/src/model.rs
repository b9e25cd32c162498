//! Shared domain types: triples with provenance, verdict labels and claims.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Placeholder object for triples extracted from a unary relation.
pub const UNARY_PLACEHOLDER: &str = "[NONE]";

/// NFC-normalizes `text`, trims it and collapses whitespace runs to a single space.
/// Case is preserved.
pub fn normalize_text(text: &str) -> String {
    let nfc: String = text.nfc().collect();
    let mut out = String::with_capacity(nfc.len());
    for word in nfc.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Half-open character range `[start, end)` inside a sentence.
///
/// Offsets count Unicode scalar values, not bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidSpan { start, end });
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// Returns the substring covered by this span, or `None` when it runs past `text`.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        let mut indices = text.char_indices().map(|(i, _)| i).chain(std::iter::once(text.len()));
        let start = indices.nth(self.start)?;
        let end = if self.end == self.start {
            start
        } else {
            indices.nth(self.end - self.start - 1)?
        };
        Some(&text[start..end])
    }

    pub fn cover(&self, other: &CharSpan) -> CharSpan {
        CharSpan { start: self.start.min(other.start), end: self.end.max(other.end) }
    }
}

/// A sentence inside a document, addressed by document id and sentence index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceRef {
    pub doc_id: String,
    pub sentence_index: usize,
}

impl SentenceRef {
    pub fn new(doc_id: impl Into<String>, sentence_index: usize) -> Self {
        Self { doc_id: doc_id.into(), sentence_index }
    }
}

impl fmt::Display for SentenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.sentence_index)
    }
}

/// Back-reference from an extracted unit to the part of a sentence it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceRef {
    pub sentence: SentenceRef,
    pub span: CharSpan,
}

impl SourceRef {
    /// Builds a reference, checking that `span` fits a sentence of `sentence_len` characters.
    pub fn new(sentence: SentenceRef, span: CharSpan, sentence_len: usize) -> Result<Self> {
        if span.start >= span.end || span.end > sentence_len {
            return Err(Error::InvalidSpan { start: span.start, end: span.end });
        }
        Ok(Self { sentence, span })
    }
}

/// Character spans of each triple field inside the source sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpans {
    pub subject: CharSpan,
    /// Relation segments in sentence order, joined by single spaces.
    pub relation: Vec<CharSpan>,
    /// `None` for the unary placeholder.
    pub object: Option<CharSpan>,
}

/// Where a triple came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Extracted from text; `source.span` covers all three fields.
    Text { source: SourceRef, fields: FieldSpans },
    /// Proposed by the universal-schema model rather than read from text.
    #[serde(rename = "uschema")]
    UniversalSchema,
}

impl Provenance {
    pub fn source(&self) -> Option<&SourceRef> {
        match self {
            Provenance::Text { source, .. } => Some(source),
            Provenance::UniversalSchema => None,
        }
    }
}

/// A `<subject, relation, object>` unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    subject: String,
    relation: String,
    object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl Triple {
    /// Builds a triple from raw fields. Fields are normalized and must be non-empty.
    pub fn new(subject: &str, relation: &str, object: &str) -> Result<Self> {
        let subject = normalize_text(subject);
        let relation = normalize_text(relation);
        let object = normalize_text(object);
        for (field, value) in [("subject", &subject), ("relation", &relation), ("object", &object)] {
            if value.is_empty() {
                return Err(Error::EmptyField(field));
            }
        }
        Ok(Self { subject, relation, object, provenance: None })
    }

    pub fn unary(subject: &str, relation: &str) -> Result<Self> {
        Self::new(subject, relation, UNARY_PLACEHOLDER)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }

    pub fn relation(&self) -> &str {
        &self.relation
    }

    pub fn object(&self) -> &str {
        &self.object
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn is_unary(&self) -> bool {
        self.object == UNARY_PLACEHOLDER
    }

    /// Normalized `(subject, relation, object)` identity, ignoring provenance.
    pub fn key(&self) -> (&str, &str, &str) {
        (&self.subject, &self.relation, &self.object)
    }

    /// Space-joined surface form; the unary placeholder is dropped.
    pub fn linearize(&self) -> String {
        if self.is_unary() {
            format!("{} {}", self.subject, self.relation)
        } else {
            format!("{} {} {}", self.subject, self.relation, self.object)
        }
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.subject, self.relation, self.object)
    }
}

/// Linearizes a triple into the string fed to the entailment scorer.
pub fn linearize_triple(t: &Triple) -> String {
    t.linearize()
}

/// Three-way verdict.
///
/// The derived order `Refutes < Nei < Supports` is used only to break ties; the lowest
/// (most cautious) label wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VerdictLabel {
    #[serde(rename = "REFUTES")]
    Refutes,
    #[serde(rename = "NOT ENOUGH INFO")]
    Nei,
    #[serde(rename = "SUPPORTS")]
    Supports,
}

impl VerdictLabel {
    pub const ALL: [VerdictLabel; 3] = [VerdictLabel::Refutes, VerdictLabel::Nei, VerdictLabel::Supports];

    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictLabel::Supports => "SUPPORTS",
            VerdictLabel::Refutes => "REFUTES",
            VerdictLabel::Nei => "NOT ENOUGH INFO",
        }
    }

    /// Dense index following the tie-break order.
    pub fn index(&self) -> usize {
        match self {
            VerdictLabel::Refutes => 0,
            VerdictLabel::Nei => 1,
            VerdictLabel::Supports => 2,
        }
    }
}

impl fmt::Display for VerdictLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerdictLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "SUPPORTS" => Ok(VerdictLabel::Supports),
            "REFUTES" => Ok(VerdictLabel::Refutes),
            "NOT ENOUGH INFO" => Ok(VerdictLabel::Nei),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Verdict for a claim triple as predicted from a single evidence triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredVerdict {
    pub label: VerdictLabel,
    pub probability: f64,
    pub evidence: Triple,
}

impl ScoredVerdict {
    pub fn new(label: VerdictLabel, probability: f64, evidence: Triple) -> Result<Self> {
        if !(0.0..=1.0).contains(&probability) {
            return Err(Error::ProbabilityOutOfRange(probability));
        }
        Ok(Self { label, probability, evidence })
    }
}

/// Gold evidence group: every sentence in the set is needed together.
pub type EvidenceGroup = BTreeSet<SentenceRef>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub id: u64,
    pub text: String,
    #[serde(default)]
    pub gold_label: Option<VerdictLabel>,
    #[serde(default)]
    pub gold_evidence: Option<Vec<EvidenceGroup>>,
}

impl Claim {
    pub fn new(id: u64, text: &str) -> Result<Self> {
        let text = normalize_text(text);
        if text.is_empty() {
            return Err(Error::EmptyClaim(id));
        }
        Ok(Self { id, text, gold_label: None, gold_evidence: None })
    }

    pub fn with_gold(mut self, label: VerdictLabel, evidence: Vec<EvidenceGroup>) -> Self {
        self.gold_label = Some(label);
        self.gold_evidence = Some(evidence);
        self
    }

    /// Document id used for provenance of claim triples.
    pub fn source_doc_id(&self) -> String {
        format!("claim:{}", self.id)
    }
}
