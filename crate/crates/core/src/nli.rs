//! Pairwise entailment scoring and the mapping from NLI classes to verdicts.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{linearize_triple, Triple, VerdictLabel};
use crate::text::nli_tokens;

const SUM_TOLERANCE: f64 = 1e-6;

/// Softmax output over the three NLI classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliDistribution {
    pub entailment: f64,
    pub contradiction: f64,
    pub neutral: f64,
}

impl NliDistribution {
    pub fn new(entailment: f64, contradiction: f64, neutral: f64) -> Result<Self> {
        let d = Self { entailment, contradiction, neutral };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.entailment, self.contradiction, self.neutral];
        if parts.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidDistribution(format!("component outside [0, 1]: {self:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("sums to {sum}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NliRequest {
    pub premise: String,
    pub hypothesis: String,
}

impl NliRequest {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Result<Self> {
        let premise = premise.into();
        let hypothesis = hypothesis.into();
        if premise.trim().is_empty() || hypothesis.trim().is_empty() {
            return Err(Error::Config("NLI premise and hypothesis must be non-empty".into()));
        }
        Ok(Self { premise, hypothesis })
    }
}

/// Builds the scorer input for a claim triple `c` checked against evidence triple `e`.
/// The evidence is always the premise.
pub fn make_nli_input(e: &Triple, c: &Triple) -> NliRequest {
    NliRequest { premise: linearize_triple(e), hypothesis: linearize_triple(c) }
}

/// Maps the argmax class to a verdict: entailment to Supports, contradiction to
/// Refutes, neutral to NEI. Ties go to the most cautious label.
pub fn map_nli_label(dist: &NliDistribution) -> (VerdictLabel, f64) {
    let ordered = [
        (VerdictLabel::Refutes, dist.contradiction),
        (VerdictLabel::Nei, dist.neutral),
        (VerdictLabel::Supports, dist.entailment),
    ];
    let mut best = ordered[0];
    for candidate in &ordered[1..] {
        if candidate.1 > best.1 {
            best = *candidate;
        }
    }
    best
}

/// Anything that scores premise/hypothesis pairs.
pub trait NliScorer: Send + Sync {
    /// Order-preserving batch classification.
    fn classify(&self, batch: &[NliRequest]) -> Result<Vec<NliDistribution>>;
}

/// Pairs of mutually exclusive words or phrases, e.g. "directed" / "reviewed".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExclusivePairs {
    pairs: Vec<(Vec<String>, Vec<String>)>,
}

impl ExclusivePairs {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self { pairs: pairs.into_iter().map(|(a, b)| (nli_tokens(a), nli_tokens(b))).collect() }
    }

    /// One tab-separated pair per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) if !a.trim().is_empty() && !b.trim().is_empty() => {
                    pairs.push((nli_tokens(a), nli_tokens(b)));
                }
                _ => return Err(Error::Config(format!("exclusive pairs line {}: expected two tab-separated terms", i + 1))),
            }
        }
        Ok(Self { pairs })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// True if one side mentions one member of a pair and the other side mentions the
    /// other member (and not the first).
    pub fn conflict(&self, premise: &[String], hypothesis: &[String]) -> bool {
        self.pairs.iter().any(|(a, b)| {
            let crosses = |x: &[String], y: &[String]| {
                contains_phrase(premise, x)
                    && contains_phrase(hypothesis, y)
                    && !contains_phrase(premise, y)
                    && !contains_phrase(hypothesis, x)
            };
            a != b && (crosses(a, b) || crosses(b, a))
        })
    }
}

fn contains_phrase(tokens: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && tokens.windows(phrase.len()).any(|w| w == phrase)
}

const NEGATION_TOKENS: &[&str] = &["not", "no", "never", "n't"];
const CLASS_FLOOR: f64 = 0.01;
const CONTRADICTION_PEAK: f64 = 0.90;
const CONTRADICTION_SIDE: f64 = 0.05;

/// Deterministic lexical stand-in for a pretrained NLI model.
///
/// With `J` the token Jaccard overlap, a negation mismatch or an exclusive pair yields
/// `(0.05 J, 0.90 J, 1 - 0.95 J)`; otherwise `(J, 0, 1 - J)` (entailment, contradiction,
/// neutral). Each class is then lifted to `0.01 + 0.97 p` so every class keeps at least
/// `0.01`.
#[derive(Debug, Clone, Default)]
pub struct BaselineScorer {
    exclusive: ExclusivePairs,
}

impl BaselineScorer {
    pub fn new(exclusive: ExclusivePairs) -> Self {
        Self { exclusive }
    }

    pub fn classify_one(&self, req: &NliRequest) -> NliDistribution {
        let p = nli_tokens(&req.premise);
        let h = nli_tokens(&req.hypothesis);
        let jaccard = jaccard(&p, &h);
        let negated = |tokens: &[String]| tokens.iter().any(|t| NEGATION_TOKENS.contains(&t.as_str()));
        let conflict = negated(&p) != negated(&h) || self.exclusive.conflict(&p, &h);
        let (e, c, n) = if conflict {
            (
                CONTRADICTION_SIDE * jaccard,
                CONTRADICTION_PEAK * jaccard,
                1.0 - (CONTRADICTION_SIDE + CONTRADICTION_PEAK) * jaccard,
            )
        } else {
            (jaccard, 0.0, 1.0 - jaccard)
        };
        let lift = |x: f64| CLASS_FLOOR + (1.0 - 3.0 * CLASS_FLOOR) * x;
        NliDistribution { entailment: lift(e), contradiction: lift(c), neutral: lift(n) }
    }
}

pub fn jaccard(a: &[String], b: &[String]) -> f64 {
    let a: HashSet<&str> = a.iter().map(String::as_str).collect();
    let b: HashSet<&str> = b.iter().map(String::as_str).collect();
    let union = a.union(&b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(&b).count() as f64 / union as f64
}

pub fn baseline_classify(req: &NliRequest) -> NliDistribution {
    BaselineScorer::default().classify_one(req)
}

impl NliScorer for BaselineScorer {
    fn classify(&self, batch: &[NliRequest]) -> Result<Vec<NliDistribution>> {
        Ok(batch.iter().map(|r| self.classify_one(r)).collect())
    }
}
