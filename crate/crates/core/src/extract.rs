//! Deterministic open information extraction.
//!
//! The pattern extractor anchors on verb-lexicon matches. For every verb group it takes
//! the span to its left as subject and the span to its right, split on coordinating
//! conjunctions and commas, as objects. A short run of words ending in a preposition
//! right after the verb group is folded into the relation ("was born in",
//! "is a member of").

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{
    normalize_text, CharSpan, Claim, FieldSpans, Provenance, SentenceRef, SourceRef, Triple,
    UNARY_PLACEHOLDER,
};
use crate::retrieval::EvidenceSet;

const DEFAULT_LEXICON: &str = include_str!("../data/verbs.txt");

const PREPOSITIONS: &[&str] = &[
    "about", "across", "after", "against", "among", "as", "at", "before", "behind", "between",
    "by", "during", "for", "from", "in", "into", "near", "of", "on", "onto", "over", "since",
    "through", "to", "under", "until", "upon", "with", "within", "without",
];
const CONJUNCTIONS: &[&str] = &["and", "or", "but", "nor"];
const NEGATIONS: &[&str] = &["not", "never", "n't"];

/// Longest run of words allowed between a verb group and a folded preposition.
const MAX_RELATION_FILLER: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractorConfig {
    /// Lowercased surface verb forms and auxiliaries.
    pub verb_lexicon: BTreeSet<String>,
    pub max_triples_per_sentence: usize,
    /// When on, an agent "by" after a verb group is folded into the relation
    /// ("was reviewed by"); when off it stays with the object ("by Ron Underwood").
    pub passive_voice: bool,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            verb_lexicon: parse_lexicon(DEFAULT_LEXICON),
            max_triples_per_sentence: 16,
            passive_voice: true,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.verb_lexicon.is_empty() {
            return Err(Error::Config("verb lexicon is empty".into()));
        }
        if self.max_triples_per_sentence == 0 {
            return Err(Error::Config("max triples per sentence must be at least 1".into()));
        }
        Ok(())
    }

    /// Replaces the lexicon with the contents of a plain-text file.
    pub fn with_lexicon_file(mut self, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.verb_lexicon = parse_lexicon(&text);
        self.validate()?;
        Ok(self)
    }
}

/// One surface form per line; `#` starts a comment.
pub fn parse_lexicon(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Anything that turns sentences into provenance-tracked triples.
pub trait TripleExtractor: Send + Sync {
    fn extract(&self, sentences: &[(SentenceRef, &str)]) -> Vec<Triple>;
}

#[derive(Debug, Clone, Default)]
pub struct PatternExtractor {
    cfg: ExtractorConfig,
}

impl PatternExtractor {
    pub fn new(cfg: ExtractorConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.cfg
    }
}

impl TripleExtractor for PatternExtractor {
    fn extract(&self, sentences: &[(SentenceRef, &str)]) -> Vec<Triple> {
        extract_triples(sentences, &self.cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Verb,
    Negation,
    Preposition,
    /// Conjunction or comma: splits argument lists.
    Boundary,
    /// Sentence-final or bracketing punctuation, trimmed from span edges.
    Punct,
    Word,
}

#[derive(Debug, Clone)]
struct Token {
    lower: String,
    span: CharSpan,
    kind: Kind,
}

fn tokenize(text: &str, lexicon: &BTreeSet<String>) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let mut raw: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if is_word_char(c) {
            let start = i;
            i += 1;
            while i < chars.len() {
                let c = chars[i];
                let joins = (c == '\'' || c == '-' || c == '\u{2019}')
                    && chars.get(i + 1).is_some_and(|n| is_word_char(*n));
                if is_word_char(c) || joins {
                    i += 1;
                } else {
                    break;
                }
            }
            // split contracted negation: "isn't" -> "is" + "n't"
            let word: String = chars[start..i].iter().collect::<String>().to_lowercase();
            if i - start > 3 && (word.ends_with("n't") || word.ends_with("n\u{2019}t")) {
                raw.push((start, i - 3));
                raw.push((i - 3, i));
            } else {
                raw.push((start, i));
            }
        } else {
            raw.push((i, i + 1));
            i += 1;
        }
    }
    raw.into_iter()
        .map(|(start, end)| {
            let lower: String =
                chars[start..end].iter().collect::<String>().to_lowercase().replace('\u{2019}', "'");
            let kind = classify(&lower, lexicon);
            Token { lower, span: CharSpan { start, end }, kind }
        })
        .collect()
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn classify(lower: &str, lexicon: &BTreeSet<String>) -> Kind {
    if NEGATIONS.contains(&lower) {
        Kind::Negation
    } else if lexicon.contains(lower) {
        Kind::Verb
    } else if PREPOSITIONS.contains(&lower) {
        Kind::Preposition
    } else if CONJUNCTIONS.contains(&lower) || lower == "," || lower == ";" {
        Kind::Boundary
    } else if lower.chars().all(is_word_char) || lower.contains('-') || lower.contains('\'') {
        Kind::Word
    } else {
        Kind::Punct
    }
}

/// Token index range `[start, end)`.
type Range = (usize, usize);

/// Maximal runs of verbs, allowing negations inside or right after a verb.
fn verb_groups(tokens: &[Token]) -> Vec<Range> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if tokens[i].kind != Kind::Verb {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i + 1;
        let mut j = i + 1;
        while j < tokens.len() && matches!(tokens[j].kind, Kind::Verb | Kind::Negation) {
            j += 1;
            end = j;
        }
        groups.push((start, end));
        i = end;
    }
    groups
}

/// Verb groups sharing subject and arguments, e.g. "wrote and tested".
fn cluster_groups(tokens: &[Token], groups: &[Range]) -> Vec<Vec<Range>> {
    let mut clusters: Vec<Vec<Range>> = Vec::new();
    for &g in groups {
        if let Some(last) = clusters.last_mut() {
            let prev_end = last.last().unwrap().1;
            if g.0 == prev_end + 1 && tokens[prev_end].kind == Kind::Boundary {
                last.push(g);
                continue;
            }
        }
        clusters.push(vec![g]);
    }
    clusters
}

/// Trims punctuation and boundary tokens from both ends; `None` if nothing is left.
fn trim(tokens: &[Token], (mut start, mut end): Range) -> Option<Range> {
    while start < end && matches!(tokens[start].kind, Kind::Punct | Kind::Boundary) {
        start += 1;
    }
    while end > start && matches!(tokens[end - 1].kind, Kind::Punct | Kind::Boundary) {
        end -= 1;
    }
    (start < end).then_some((start, end))
}

/// Splits a range on boundary tokens into trimmed, non-empty argument spans.
fn split_arguments(tokens: &[Token], (start, end): Range) -> Vec<Range> {
    let mut out = Vec::new();
    let mut seg_start = start;
    for i in start..=end {
        if i == end || tokens[i].kind == Kind::Boundary {
            if let Some(r) = trim(tokens, (seg_start, i)) {
                out.push(r);
            }
            seg_start = i + 1;
        }
    }
    out
}

fn last_boundary(tokens: &[Token], (start, end): Range) -> Option<usize> {
    (start..end).rev().find(|&i| tokens[i].kind == Kind::Boundary)
}

/// Words-then-preposition prefix of the right context to fold into the relation.
/// Returns the index one past the preposition.
fn relation_suffix(tokens: &[Token], (start, end): Range, passive_voice: bool) -> Option<usize> {
    let limit = end.min(start + MAX_RELATION_FILLER + 1);
    for i in start..limit {
        match tokens[i].kind {
            Kind::Preposition => {
                if !passive_voice && tokens[i].lower == "by" {
                    return None;
                }
                // something must remain for the object
                return trim(tokens, (i + 1, end)).map(|_| i + 1);
            }
            Kind::Word => {}
            _ => return None,
        }
    }
    None
}

struct Clause {
    groups: Vec<Range>,
    subjects: Vec<Range>,
    right: Range,
}

fn clauses(tokens: &[Token], lexicon_groups: Vec<Vec<Range>>) -> Vec<Clause> {
    let mut out: Vec<Clause> = Vec::new();
    let n = lexicon_groups.len();
    for (k, groups) in lexicon_groups.iter().enumerate() {
        let first = groups[0].0;
        let last = groups.last().unwrap().1;
        let right_end = if k + 1 < n { lexicon_groups[k + 1][0].0 } else { tokens.len() };
        let subjects = if k == 0 {
            split_arguments(tokens, (0, first))
        } else {
            let prev = out.last_mut().unwrap();
            let between = (prev.right.0, first);
            match last_boundary(tokens, between) {
                Some(b) if trim(tokens, (b + 1, first)).is_none() => {
                    prev.right = (between.0, b);
                    prev.subjects.clone()
                }
                Some(b) => {
                    prev.right = (between.0, b);
                    trim(tokens, (b + 1, first)).into_iter().collect()
                }
                // no boundary: the span is object of the previous clause and subject of this one
                None => trim(tokens, between).into_iter().collect(),
            }
        };
        out.push(Clause { groups: groups.clone(), subjects, right: (last, right_end) });
    }
    out
}

fn text_of(sentence: &str, tokens: &[Token], (start, end): Range) -> (String, CharSpan) {
    let span = CharSpan { start: tokens[start].span.start, end: tokens[end - 1].span.end };
    let text = span.slice(sentence).map(normalize_text).unwrap_or_default();
    (text, span)
}

fn extract_sentence(sref: &SentenceRef, sentence: &str, cfg: &ExtractorConfig) -> Vec<Triple> {
    let tokens = tokenize(sentence, &cfg.verb_lexicon);
    let groups = verb_groups(&tokens);
    let clusters = cluster_groups(&tokens, &groups);
    let sentence_len = sentence.chars().count();
    let mut triples = Vec::new();
    for clause in clauses(&tokens, clusters) {
        if clause.subjects.is_empty() {
            continue;
        }
        let suffix_end = relation_suffix(&tokens, clause.right, cfg.passive_voice);
        let object_range = (suffix_end.unwrap_or(clause.right.0), clause.right.1);
        let objects: Vec<(String, CharSpan)> = split_arguments(&tokens, object_range)
            .into_iter()
            .map(|r| text_of(sentence, &tokens, r))
            .collect();
        let subjects: Vec<(String, CharSpan)> =
            clause.subjects.iter().map(|&r| text_of(sentence, &tokens, r)).collect();
        let last_group = clause.groups.len() - 1;
        for (gi, &group) in clause.groups.iter().enumerate() {
            let mut segments = vec![text_of(sentence, &tokens, group)];
            // the folded preposition is adjacent only to the last group of a cluster,
            // earlier groups get it as a separate segment
            if let Some(end) = suffix_end {
                let seg = text_of(sentence, &tokens, (clause.right.0, end));
                if gi == last_group {
                    let (_, g_span) = &segments[0];
                    let merged = CharSpan { start: g_span.start, end: seg.1.end };
                    segments = vec![(merged.slice(sentence).map(normalize_text).unwrap_or_default(), merged)];
                } else {
                    segments.push(seg);
                }
            }
            let relation: String =
                segments.iter().map(|(t, _)| t.as_str()).collect::<Vec<_>>().join(" ");
            let relation_spans: Vec<CharSpan> = segments.iter().map(|(_, s)| *s).collect();
            for triple in expand_spanned(&relation_spans, &subjects, &objects) {
                let (subject, object, fields) = triple;
                let mut cover = fields.subject;
                for s in &fields.relation {
                    cover = cover.cover(s);
                }
                if let Some(o) = &fields.object {
                    cover = cover.cover(o);
                }
                let Ok(source) = SourceRef::new(sref.clone(), cover, sentence_len) else {
                    continue;
                };
                let Ok(t) = Triple::new(&subject, &relation, &object) else {
                    continue;
                };
                triples.push(t.with_provenance(Provenance::Text { source, fields }));
            }
        }
    }
    triples.truncate(cfg.max_triples_per_sentence);
    triples
}

fn expand_spanned(
    relation_spans: &[CharSpan],
    subjects: &[(String, CharSpan)],
    objects: &[(String, CharSpan)],
) -> Vec<(String, String, FieldSpans)> {
    let mut out = Vec::new();
    for (s, s_span) in subjects {
        if objects.is_empty() {
            out.push((
                s.clone(),
                UNARY_PLACEHOLDER.to_string(),
                FieldSpans { subject: *s_span, relation: relation_spans.to_vec(), object: None },
            ));
        }
        for (o, o_span) in objects {
            out.push((
                s.clone(),
                o.clone(),
                FieldSpans { subject: *s_span, relation: relation_spans.to_vec(), object: Some(*o_span) },
            ));
        }
    }
    out
}

/// Extracts triples from each sentence in order.
///
/// Sentences without a verb-anchored pattern contribute nothing. Each sentence yields
/// at most `cfg.max_triples_per_sentence` triples.
pub fn extract_triples(sentences: &[(SentenceRef, &str)], cfg: &ExtractorConfig) -> Vec<Triple> {
    sentences
        .iter()
        .flat_map(|(sref, text)| extract_sentence(sref, text, cfg))
        .collect()
}

/// Cross product of subjects and objects under one relation. An empty object list
/// yields unary triples with the placeholder object.
pub fn expand_arguments(relation: &str, subjects: &[&str], objects: &[&str]) -> Result<Vec<Triple>> {
    let mut out = Vec::with_capacity(subjects.len() * objects.len().max(1));
    for s in subjects {
        if objects.is_empty() {
            out.push(Triple::unary(s, relation)?);
        }
        for o in objects {
            out.push(Triple::new(s, relation, o)?);
        }
    }
    Ok(out)
}

/// Splits text into sentences after `.`, `!` or `?` followed by whitespace.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    for (k, &(i, c)) in bytes.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') && bytes.get(k + 1).is_some_and(|(_, n)| n.is_whitespace()) {
            let end = i + c.len_utf8();
            let piece = text[start..end].trim();
            if !piece.is_empty() {
                out.push(piece);
            }
            start = end;
        }
    }
    let rest = text[start..].trim();
    if !rest.is_empty() {
        out.push(rest);
    }
    out
}

/// Removes triples whose normalized fields repeat an earlier one.
pub fn dedup_triples(triples: Vec<Triple>) -> Vec<Triple> {
    let mut seen: HashSet<(String, String, String)> = HashSet::new();
    triples
        .into_iter()
        .filter(|t| {
            let (s, r, o) = t.key();
            seen.insert((s.to_string(), r.to_string(), o.to_string()))
        })
        .collect()
}

/// Claim triples and evidence triples for one claim.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedTriples {
    pub claim: Vec<Triple>,
    pub evidence: Vec<Triple>,
}

/// Extracts and deduplicates claim and evidence triples, keeping first occurrences.
///
/// Fails with [`Error::EmptyClaimExtraction`] when the claim yields no triple.
pub fn extract_for_claim_and_evidence(
    claim: &Claim,
    evidence: &EvidenceSet,
    extractor: &dyn TripleExtractor,
) -> Result<ExtractedTriples> {
    let claim_triples = extract_claim(claim, extractor);
    if claim_triples.is_empty() {
        return Err(Error::EmptyClaimExtraction(claim.id));
    }
    Ok(ExtractedTriples { claim: claim_triples, evidence: extract_evidence(evidence, extractor) })
}

pub fn extract_claim(claim: &Claim, extractor: &dyn TripleExtractor) -> Vec<Triple> {
    let doc = claim.source_doc_id();
    let sentences: Vec<(SentenceRef, &str)> = split_sentences(&claim.text)
        .into_iter()
        .enumerate()
        .map(|(i, s)| (SentenceRef::new(doc.clone(), i), s))
        .collect();
    dedup_triples(extractor.extract(&sentences))
}

pub fn extract_evidence(evidence: &EvidenceSet, extractor: &dyn TripleExtractor) -> Vec<Triple> {
    let sentences: Vec<(SentenceRef, &str)> =
        evidence.entries.iter().map(|e| (e.sentence.clone(), e.text.as_str())).collect();
    dedup_triples(extractor.extract(&sentences))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> Vec<Triple> {
        extract_triples(&[(SentenceRef::new("d", 0), text)], &ExtractorConfig::default())
    }

    fn keys(ts: &[Triple]) -> Vec<(String, String, String)> {
        ts.iter()
            .map(|t| (t.subject().to_string(), t.relation().to_string(), t.object().to_string()))
            .collect()
    }

    fn k(s: &str, r: &str, o: &str) -> (String, String, String) {
        (s.into(), r.into(), o.into())
    }

    #[test]
    fn prepositional_relation() {
        assert_eq!(keys(&run("Barack Obama was born in Hawaii")), vec![k("Barack Obama", "was born in", "Hawaii")]);
    }

    #[test]
    fn no_verb_no_triples() {
        assert!(run("The.").is_empty());
    }

    // Hand-applied rules: "wrote" and "tested" are verb groups joined by a single
    // conjunction, so they form one cluster. Left of the cluster is "Ada" (subject);
    // right is "the program" with no preposition, so nothing is folded into the
    // relation and the only object is "the program".
    #[test]
    fn coordinated_verbs_share_arguments() {
        assert_eq!(
            keys(&run("Ada wrote and tested the program")),
            vec![k("Ada", "wrote", "the program"), k("Ada", "tested", "the program")]
        );
    }

    #[test]
    fn copula_noun_preposition_relation() {
        assert_eq!(
            keys(&run("Manning is a member of Stanford")),
            vec![k("Manning", "is a member of", "Stanford")]
        );
    }

    #[test]
    fn passive_agent_follows_flag() {
        let text = "The Adventures of Pluto Nash was reviewed by Ron Underwood .";
        assert_eq!(keys(&run(text)), vec![k("The Adventures of Pluto Nash", "was reviewed by", "Ron Underwood")]);
        let cfg = ExtractorConfig { passive_voice: false, ..ExtractorConfig::default() };
        let ts = extract_triples(&[(SentenceRef::new("d", 0), text)], &cfg);
        assert_eq!(keys(&ts), vec![k("The Adventures of Pluto Nash", "was reviewed", "by Ron Underwood")]);
    }

    #[test]
    fn unary_relation_gets_placeholder() {
        assert_eq!(keys(&run("The cat sleeps.")), vec![k("The cat", "sleeps", UNARY_PLACEHOLDER)]);
    }

    #[test]
    fn chained_clauses_inherit_subject() {
        let ts = run("Manning teaches linguistics, wrote Foundations and was born in Sydney.");
        assert_eq!(
            keys(&ts),
            vec![
                k("Manning", "teaches", "linguistics"),
                k("Manning", "wrote", "Foundations"),
                k("Manning", "was born in", "Sydney"),
            ]
        );
    }

    #[test]
    fn participle_clause_reuses_object_as_subject() {
        let ts = run("The Adventures of Pluto Nash is a comedy film starring Eddie Murphy and directed by Ron Underwood.");
        assert_eq!(
            keys(&ts),
            vec![
                k("The Adventures of Pluto Nash", "is", "a comedy film"),
                k("a comedy film", "starring", "Eddie Murphy"),
                k("a comedy film", "directed by", "Ron Underwood"),
            ]
        );
    }

    #[test]
    fn coordinated_subjects_and_objects_expand() {
        let ts = run("Tom and Jerry visited Paris and Rome.");
        assert_eq!(
            keys(&ts),
            vec![
                k("Tom", "visited", "Paris"),
                k("Tom", "visited", "Rome"),
                k("Jerry", "visited", "Paris"),
                k("Jerry", "visited", "Rome"),
            ]
        );
    }

    #[test]
    fn negation_stays_in_relation() {
        assert_eq!(keys(&run("X is not tall")), vec![k("X", "is not", "tall")]);
        assert_eq!(keys(&run("X isn't tall")), vec![k("X", "isn't", "tall")]);
    }

    #[test]
    fn max_triples_is_enforced() {
        let cfg = ExtractorConfig { max_triples_per_sentence: 2, ..ExtractorConfig::default() };
        let ts = extract_triples(&[(SentenceRef::new("d", 0), "Tom and Jerry visited Paris and Rome.")], &cfg);
        assert_eq!(ts.len(), 2);
    }

    #[test]
    fn provenance_spans_reproduce_fields() {
        let text = "Manning teaches linguistics, wrote Foundations and was born in Sydney.";
        for t in run(text) {
            let Some(Provenance::Text { source, fields }) = t.provenance() else { panic!("no provenance") };
            assert_eq!(source.sentence, SentenceRef::new("d", 0));
            assert_eq!(fields.subject.slice(text).unwrap(), t.subject());
            let rel: Vec<&str> = fields.relation.iter().map(|s| s.slice(text).unwrap()).collect();
            assert_eq!(rel.join(" "), t.relation());
            assert_eq!(fields.object.unwrap().slice(text).unwrap(), t.object());
        }
    }

    #[test]
    fn expand_arguments_cross_product() {
        let ts = expand_arguments("visited", &["A", "B"], &["X"]).unwrap();
        assert_eq!(keys(&ts), vec![k("A", "visited", "X"), k("B", "visited", "X")]);
        let ts = expand_arguments("sleeps", &["A"], &[]).unwrap();
        assert_eq!(keys(&ts), vec![k("A", "sleeps", UNARY_PLACEHOLDER)]);
        let ts = expand_arguments("gave", &["A"], &["X", "Y"]).unwrap();
        assert_eq!(keys(&ts), vec![k("A", "gave", "X"), k("A", "gave", "Y")]);
    }

    #[test]
    fn lexicon_parsing_skips_comments() {
        let lex = parse_lexicon("# header\nRuns\n\n  walks # trailing\n");
        assert_eq!(lex.into_iter().collect::<Vec<_>>(), vec!["runs", "walks"]);
    }

    #[test]
    fn empty_lexicon_rejected() {
        let cfg = ExtractorConfig { verb_lexicon: BTreeSet::new(), ..ExtractorConfig::default() };
        assert!(PatternExtractor::new(cfg).is_err());
    }

    #[test]
    fn sentence_splitting() {
        assert_eq!(split_sentences("A runs. B walks!  C"), vec!["A runs.", "B walks!", "C"]);
        assert_eq!(split_sentences("Pluto Nash was reviewed."), vec!["Pluto Nash was reviewed."]);
    }
}
