//! TOML pipeline configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::ExtractorConfig;
use crate::retrieval::RetrievalMode;
use crate::uschema::TrainConfig;
use crate::verify::VerifyConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSettings {
    pub mode: RetrievalMode,
    pub k: usize,
    /// Embedding provider for the cosine-based modes: a hashed provider id such as
    /// `hashed-bow-64`, or `remote` for the sidecar.
    pub embedder: Option<String>,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        Self { mode: RetrievalMode::TfIdfOnly, k: 5, embedder: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorSettings {
    /// Verb lexicon file replacing the built-in one.
    pub lexicon: Option<PathBuf>,
    pub passive_voice: bool,
    pub max_triples_per_sentence: usize,
}

impl Default for ExtractorSettings {
    fn default() -> Self {
        let d = ExtractorConfig::default();
        Self { lexicon: None, passive_voice: d.passive_voice, max_triples_per_sentence: d.max_triples_per_sentence }
    }
}

impl ExtractorSettings {
    pub fn build(&self) -> Result<ExtractorConfig> {
        let mut cfg = ExtractorConfig {
            passive_voice: self.passive_voice,
            max_triples_per_sentence: self.max_triples_per_sentence,
            ..ExtractorConfig::default()
        };
        if let Some(path) = &self.lexicon {
            cfg = cfg.with_lexicon_file(path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScorerSettings {
    Baseline {
        #[serde(default)]
        exclusive_pairs: Option<PathBuf>,
    },
    Remote {
        endpoint: String,
    },
}

impl Default for ScorerSettings {
    fn default() -> Self {
        ScorerSettings::Baseline { exclusive_pairs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct USchemaSettings {
    pub model: PathBuf,
    pub threshold: f64,
    pub session_steps: usize,
    pub bridge_evidence_relations: bool,
    /// Optimizer settings for per-claim session updates.
    pub session: TrainConfig,
}

impl Default for USchemaSettings {
    fn default() -> Self {
        Self {
            model: PathBuf::new(),
            threshold: 0.5,
            session_steps: 1,
            bridge_evidence_relations: true,
            session: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub verify: VerifyConfig,
    pub retrieval: RetrievalSettings,
    pub extractor: ExtractorSettings,
    pub scorer: ScorerSettings,
    pub uschema: Option<USchemaSettings>,
}

impl PipelineConfig {
    /// Parses a config; relative paths are resolved against `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.extractor.lexicon.as_mut() {
            fix(p);
        }
        if let ScorerSettings::Baseline { exclusive_pairs: Some(p) } = &mut self.scorer {
            fix(p);
        }
        if let Some(u) = self.uschema.as_mut() {
            fix(&mut u.model);
        }
    }

    /// Checks value ranges and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        self.verify.validate()?;
        if self.retrieval.k == 0 {
            return Err(Error::Config("retrieval k must be at least 1".into()));
        }
        if self.retrieval.mode.needs_embedder() && self.retrieval.embedder.is_none() {
            return Err(Error::MissingEmbedder(self.retrieval.mode));
        }
        let mut paths: Vec<&Path> = Vec::new();
        if let Some(p) = &self.extractor.lexicon {
            paths.push(p);
        }
        if let ScorerSettings::Baseline { exclusive_pairs: Some(p) } = &self.scorer {
            paths.push(p);
        }
        if let Some(u) = &self.uschema {
            if !(0.0..=1.0).contains(&u.threshold) {
                return Err(Error::Config(format!("uschema threshold {} outside [0, 1]", u.threshold)));
            }
            u.session.validate()?;
            paths.push(&u.model);
        }
        for p in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = PipelineConfig::from_toml("", Path::new(".")).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.retrieval.k, 5);
        assert!(cfg.uschema.is_none());
    }

    #[test]
    fn relative_paths_resolved_and_checked() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("pairs.tsv"), "directed\treviewed\n").unwrap();
        let text = "[verify]\nthreshold_supports = 0.7\nthreshold_refutes = 0.4\nvoting = \"majority\"\n\n\
                    [scorer]\nkind = \"baseline\"\nexclusive_pairs = \"pairs.tsv\"\n";
        let cfg = PipelineConfig::from_toml(text, dir.path()).unwrap();
        assert_eq!(cfg.verify.threshold_supports, 0.7);
        assert_eq!(cfg.scorer, ScorerSettings::Baseline { exclusive_pairs: Some(dir.path().join("pairs.tsv")) });

        let missing = "[uschema]\nmodel = \"nope.bin\"\n";
        assert!(matches!(PipelineConfig::from_toml(missing, dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn bad_values_rejected() {
        let base = Path::new(".");
        assert!(PipelineConfig::from_toml("[retrieval]\nk = 0\n", base).is_err());
        assert!(PipelineConfig::from_toml("[retrieval]\nmode = \"product\"\n", base).is_err());
        assert!(PipelineConfig::from_toml("[verify]\nthreshold_supports = 1.5\nthreshold_refutes = 0.5\n", base).is_err());
        assert!(PipelineConfig::from_toml("[scorer]\nkind = \"oracle\"\n", base).is_err());
        assert!(PipelineConfig::from_toml("typo = 1\n", base).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig {
            scorer: ScorerSettings::Remote { endpoint: "http://127.0.0.1:8000".into() },
            ..PipelineConfig::default()
        };
        let text = cfg.to_toml().unwrap();
        assert_eq!(PipelineConfig::from_toml(&text, Path::new(".")).unwrap(), cfg);
    }
}
