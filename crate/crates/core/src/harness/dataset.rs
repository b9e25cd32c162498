//! FEVER-style claim files.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Claim, EvidenceGroup, SentenceRef, VerdictLabel};

#[derive(Debug, Deserialize)]
struct Row {
    id: u64,
    claim: String,
    label: String,
    #[serde(default)]
    evidence: Vec<Vec<Value>>,
}

/// Reads one claim per line. Evidence is a list of groups, each a list of
/// `[annotation id, evidence id, page, sentence index]`. NEI claims get no gold groups,
/// whatever their evidence field holds.
pub fn load_fever_jsonl(path: &Path) -> Result<Vec<Claim>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut claims = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let claim = parse_line(&line).map_err(|reason| Error::parse(path, i + 1, reason))?;
        claims.push(claim);
    }
    Ok(claims)
}

pub fn parse_line(line: &str) -> std::result::Result<Claim, String> {
    let row: Row = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let label: VerdictLabel = row.label.parse().map_err(|e: Error| e.to_string())?;
    let groups = if label == VerdictLabel::Nei {
        Vec::new()
    } else {
        row.evidence.iter().map(|g| parse_group(g)).collect::<std::result::Result<Vec<_>, _>>()?
    };
    let claim = Claim::new(row.id, &row.claim).map_err(|e| e.to_string())?;
    Ok(claim.with_gold(label, groups))
}

fn parse_group(group: &[Value]) -> std::result::Result<EvidenceGroup, String> {
    let mut out = EvidenceGroup::new();
    for item in group {
        let fields = item.as_array().filter(|a| a.len() == 4).ok_or("evidence item must have 4 fields")?;
        let page = fields[2].as_str().ok_or("evidence page must be a string")?;
        let index = fields[3].as_u64().ok_or("evidence sentence index must be a non-negative integer")?;
        out.insert(SentenceRef::new(page, index as usize));
    }
    if out.is_empty() {
        return Err("empty evidence group".into());
    }
    Ok(out)
}
