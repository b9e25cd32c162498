//! Batch evaluation over a dataset.

use rayon::prelude::*;

use super::metrics::{compute_metrics, ClaimFailure, MetricsReport, Outcome};
use super::pipeline::{ClaimTrace, EvidenceInput, EvidenceRegime, Pipeline};
use crate::error::{Error, Result};
use crate::model::Claim;
use crate::retrieval::SentenceIndex;

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    /// Traces of the claims that were verified, ordered by claim id.
    pub traces: Vec<ClaimTrace>,
}

pub(crate) fn check_dataset(claims: &[Claim]) -> Result<()> {
    if claims.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(c) = claims.iter().find(|c| c.gold_label.is_none()) {
        return Err(Error::Config(format!("claim {} has no gold label", c.id)));
    }
    Ok(())
}

/// Verifies one claim under `regime`.
pub fn run_claim(pipeline: &Pipeline, claim: &Claim, index: &SentenceIndex, regime: EvidenceRegime) -> Result<ClaimTrace> {
    let evidence = pipeline.regime_evidence(claim, index, regime)?;
    pipeline.verify_claim(claim, EvidenceInput::Given(&evidence))
}

/// Runs every claim (in parallel) and scores the verdicts. A claim whose verification
/// fails is reported in `failures` and the run continues, except for transport errors
/// of a remote scorer, which abort.
pub fn evaluate(pipeline: &Pipeline, claims: &[Claim], index: &SentenceIndex, regime: EvidenceRegime) -> Result<Evaluation> {
    check_dataset(claims)?;
    let results: Vec<Result<ClaimTrace>> =
        claims.par_iter().map(|c| run_claim(pipeline, c, index, regime)).collect();

    let mut rows: Vec<(&Claim, Result<ClaimTrace>)> = claims.iter().zip(results).collect();
    rows.sort_by_key(|(c, _)| c.id);

    let mut outcomes = Vec::new();
    let mut traces = Vec::new();
    let mut failures = Vec::new();
    for (claim, result) in rows {
        match result {
            Ok(trace) => {
                outcomes.push(Outcome::from_trace(claim, &trace).expect("gold label checked"));
                traces.push(trace);
            }
            Err(e) if e.is_transport() => return Err(e),
            Err(e) => failures.push(ClaimFailure { claim_id: claim.id, error: e.to_string() }),
        }
    }
    Ok(Evaluation { report: compute_metrics(&outcomes, failures), traces })
}
