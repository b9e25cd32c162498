use std::path::Path;

use anyhow::{bail, Context, Result};
use tricheck_core::harness::{
    evaluate, format_trace, grid_search_thresholds, load_fever_jsonl, read_traces, resolve_provider, surface_csv,
    write_traces, EvidenceInput, ScorerSettings, ThresholdGrid, USchemaRuntime,
};
use tricheck_core::retrieval::load_corpus_jsonl;
use tricheck_core::uschema::{load_kg_tsv, train, TrainConfig};
use tricheck_core::{Claim, Error, EvidenceRegime, Pipeline, PipelineConfig, SentenceIndex, Voting};

use crate::{Cli, Command, RegimeArg, RunOverrides, ScorerKind, SentenceSource, VotingArg};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_REMOTE: u8 = 3;

/// Maps an error chain to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(core) = err.chain().find_map(|e| e.downcast_ref::<Error>()) else {
        return EXIT_USAGE;
    };
    match core {
        Error::Transport { .. } | Error::Server { .. } | Error::Protocol(_) => EXIT_REMOTE,
        Error::Parse { .. }
        | Error::Json(_)
        | Error::ModelFormat(_)
        | Error::UnknownLabel(_)
        | Error::EmptyField(_)
        | Error::EmptyClaim(_)
        | Error::EmptyCorpus
        | Error::EmptyDataset
        | Error::NoTrainingFacts
        | Error::UnknownGoldSentence(_) => EXIT_DATA,
        _ => EXIT_USAGE,
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Index { corpus, out } => {
            let index = build_index(corpus)?;
            index.save(out)?;
            println!("indexed {} sentences into {}", index.len(), out.display());
            Ok(())
        }
        Command::TrainUschema { kg, dev, out, embedder, train_config, learning_rate, epochs, batch_size } => {
            let mut cfg = match train_config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    toml::from_str::<TrainConfig>(&text)
                        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
                }
                None => TrainConfig::default(),
            };
            if let Some(lr) = learning_rate {
                cfg.learning_rate = *lr;
            }
            if let Some(n) = epochs {
                cfg.max_epochs = *n;
            }
            if let Some(b) = batch_size {
                cfg.batch_size = *b;
            }
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let positives = load_kg_tsv(kg)?;
            let dev_facts = match dev {
                Some(p) => load_kg_tsv(p)?,
                None => Vec::new(),
            };
            let provider = resolve_provider(embedder, cli.endpoint.as_deref())?;
            let trained = train(&positives, &dev_facts, provider, &cfg)?;
            let mut known = positives;
            known.extend(dev_facts);
            trained.model.save(out, &known)?;
            for e in &trained.report.epochs {
                match e.dev_loss {
                    Some(d) => println!("epoch {}  train loss {:.6}  dev loss {:.6}", e.epoch, e.train_loss, d),
                    None => println!("epoch {}  train loss {:.6}", e.epoch, e.train_loss),
                }
            }
            if let Some(best) = trained.report.best_epoch {
                println!("kept epoch {best}{}", if trained.report.stopped_early { " (stopped early)" } else { "" });
            }
            println!("wrote {} ({} known facts)", out.display(), known.len());
            Ok(())
        }
        Command::Verify { source, claim, overrides, json } => {
            let pipeline = pipeline(cli, overrides)?;
            let index = load_source(source)?;
            let claim = Claim::new(0, claim)?;
            let trace = pipeline.verify_claim(&claim, EvidenceInput::Retrieve(&index))?;
            if *json {
                println!("{}", serde_json::to_string_pretty(&trace)?);
            } else {
                print!("{}", format_trace(&trace));
            }
            Ok(())
        }
        Command::Evaluate { source, dataset, regime, overrides, report, trace, json } => {
            let pipeline = pipeline(cli, overrides)?;
            let index = load_source(source)?;
            let claims = load_fever_jsonl(dataset)?;
            let eval = evaluate(&pipeline, &claims, &index, regime_of(*regime))?;
            let mut metrics = eval.report;
            if let Some(p) = trace {
                write_traces(p, &eval.traces)?;
                metrics.trace_path = Some(p.clone());
            }
            if let Some(p) = report {
                write_file(p, &metrics.to_json())?;
            }
            if *json {
                println!("{}", metrics.to_json());
            } else {
                print!("{}", metrics.to_text());
            }
            Ok(())
        }
        Command::Tune { source, dataset, regime, overrides, supports, refutes, uschema, steps, csv } => {
            let pipeline = pipeline(cli, overrides)?;
            let index = load_source(source)?;
            let claims = load_fever_jsonl(dataset)?;
            let default_axis = ThresholdGrid::uniform(0.1, 0.9, *steps).supports;
            let uschema_axis = match (uschema, pipeline.uschema_threshold()) {
                (Some(v), _) => v.clone(),
                (None, Some(_)) => default_axis.clone(),
                // without gap filling the third threshold has no effect
                (None, None) => vec![0.5],
            };
            let grid = ThresholdGrid {
                supports: supports.clone().unwrap_or_else(|| default_axis.clone()),
                refutes: refutes.clone().unwrap_or_else(|| default_axis.clone()),
                uschema: uschema_axis,
            };
            let search = grid_search_thresholds(&pipeline, &claims, &index, regime_of(*regime), &grid)?;
            if let Some(p) = csv {
                write_file(p, &surface_csv(&search.surface))?;
            }
            let b = search.best;
            println!("evaluated {} grid points", search.surface.len());
            println!("best t_s={} t_r={} t_us={} accuracy={:.4}", b.t_s, b.t_r, b.t_us, b.accuracy);
            Ok(())
        }
        Command::Trace { path, claim } => {
            let traces = read_traces(path)?;
            let mut shown = 0;
            for t in traces.iter().filter(|t| claim.is_none_or(|id| t.claim_id == id)) {
                if shown > 0 {
                    println!();
                }
                print!("{}", format_trace(t));
                shown += 1;
            }
            if let (Some(id), 0) = (claim, shown) {
                bail!("claim {id} is not in {}", path.display());
            }
            Ok(())
        }
    }
}

fn regime_of(r: RegimeArg) -> EvidenceRegime {
    match r {
        RegimeArg::GoldRandom => EvidenceRegime::GoldRandom,
        RegimeArg::GoldRetrieved => EvidenceRegime::GoldRetrieved,
        RegimeArg::Retrieved => EvidenceRegime::Retrieved,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn build_index(corpus: &Path) -> Result<SentenceIndex> {
    Ok(SentenceIndex::build(&load_corpus_jsonl(corpus)?)?)
}

fn load_source(source: &SentenceSource) -> Result<SentenceIndex> {
    match (&source.index, &source.corpus) {
        (Some(p), _) => Ok(SentenceIndex::load(p)?),
        (None, Some(c)) => build_index(c),
        (None, None) => bail!("one of --index or --corpus is required"),
    }
}

/// Loads the config and applies the global and per-command overrides.
fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
        if let Some(u) = cfg.uschema.as_mut() {
            u.session.seed = seed;
        }
    }
    let configured_endpoint = match &cfg.scorer {
        ScorerSettings::Remote { endpoint } => Some(endpoint.clone()),
        ScorerSettings::Baseline { .. } => None,
    };
    let remote = match cli.scorer {
        Some(ScorerKind::Baseline) => false,
        Some(ScorerKind::Remote) => true,
        None => configured_endpoint.is_some(),
    };
    if remote {
        let Some(endpoint) = cli.endpoint.clone().or(configured_endpoint) else {
            bail!(Error::Config("the remote scorer needs --endpoint".into()));
        };
        cfg.scorer = ScorerSettings::Remote { endpoint };
    } else if configured_endpoint.is_some() {
        cfg.scorer = ScorerSettings::Baseline { exclusive_pairs: None };
    }
    Ok(cfg)
}

fn pipeline(cli: &Cli, overrides: &RunOverrides) -> Result<Pipeline> {
    let mut cfg = load_config(cli)?;
    if let Some(v) = overrides.voting {
        cfg.verify.voting = match v {
            VotingArg::Max => Voting::Max,
            VotingArg::Majority => Voting::Majority,
            VotingArg::WeightedSampling => Voting::WeightedSampling,
        };
    }
    if overrides.no_uschema {
        cfg.uschema = None;
    }
    let endpoint = cli.endpoint.as_deref();
    // embeddings may live on the sidecar even when entailment is scored locally
    let mut p = match (&cfg.scorer, endpoint, cfg.retrieval.embedder.as_deref(), cfg.uschema.as_ref()) {
        (ScorerSettings::Baseline { .. }, Some(ep), emb, us) if emb.is_some() || us.is_some() => {
            let mut local = cfg.clone();
            local.retrieval.embedder = None;
            local.uschema = None;
            let mut p = Pipeline::from_config(&local)?;
            if let Some(id) = emb {
                p = p.with_embedder(resolve_provider(id, Some(ep))?);
            }
            if let Some(u) = us {
                p = p.with_uschema(USchemaRuntime::from_settings(u, Some(ep))?);
            }
            p
        }
        _ => Pipeline::from_config(&cfg)?,
    };
    if overrides.no_uschema {
        p = p.without_uschema();
    }
    Ok(p)
}
