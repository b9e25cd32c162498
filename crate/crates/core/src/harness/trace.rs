//! Per-claim trace files, one JSON object per line.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::pipeline::ClaimTrace;
use crate::error::{Error, Result};
use crate::model::{Provenance, Triple};

pub fn write_traces(path: &Path, traces: &[ClaimTrace]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for t in traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_traces(path: &Path) -> Result<Vec<ClaimTrace>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

fn show(t: &Triple) -> String {
    let origin = match t.provenance() {
        Some(Provenance::Text { source, .. }) => format!("  [{}]", source.sentence),
        Some(Provenance::UniversalSchema) => "  [uschema]".to_string(),
        None => String::new(),
    };
    format!("<{}, {}, {}>{}", t.subject(), t.relation(), t.object(), origin)
}

/// Indented, human-readable rendering of one trace.
pub fn format_trace(trace: &ClaimTrace) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "claim {}: {}", trace.claim_id, trace.claim);
    if let Some(g) = trace.gold_label {
        let _ = writeln!(s, "gold: {g}");
    }
    let _ = writeln!(s, "verdict: {} ({:?})", trace.verdict, trace.rule);
    let _ = writeln!(s, "evidence:");
    for e in &trace.evidence {
        let _ = writeln!(s, "  {} {:.4}  {}", e.sentence, e.score, e.text);
    }
    let _ = writeln!(s, "evidence triples:");
    for t in &trace.evidence_triples {
        let _ = writeln!(s, "  {}", show(t));
    }
    for (i, tt) in trace.triples.iter().enumerate() {
        let _ = writeln!(s, "claim triple {i}: {} -> {}", show(&tt.triple), tt.label);
        for v in &tt.first.scored {
            let _ = writeln!(s, "    {:<16} {:.4}  {}", v.label.as_str(), v.probability, show(&v.evidence));
        }
        for c in &tt.filled {
            let _ = writeln!(s, "    filled {:.4}  {}", c.probability, c.fact);
        }
        if let Some(second) = &tt.second {
            let _ = writeln!(s, "    after gap filling: {}", second.label);
        }
    }
    s
}
