use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1};

use super::fact::Fact;
use crate::embedding::EmbeddingProvider;
use crate::error::{Error, Result};

/// Logistic function, evaluated without overflow.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`, evaluated without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Pairwise ranking loss `-ln σ(θ+ − θ−)` over pre-sigmoid scores.
pub fn bpr_loss(theta_pos: f64, theta_neg: f64) -> f64 {
    softplus(theta_neg - theta_pos)
}

/// Largest double strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Bilinear link-prediction model over frozen text embeddings.
///
/// The raw score of relation `r` for tuple `t` is `⟨W_r φ(r), W_t φ(t)⟩`, where `φ` is the
/// embedding provider; its probability is the logistic of that score.
#[derive(Clone)]
pub struct USchemaModel {
    provider: Arc<dyn EmbeddingProvider>,
    pub(crate) w_rel: Array2<f64>,
    pub(crate) w_tup: Array2<f64>,
}

impl fmt::Debug for USchemaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("USchemaModel")
            .field("provider", &self.provider.id())
            .field("dim", &self.dim())
            .finish()
    }
}

impl USchemaModel {
    /// Both maps start as the identity.
    pub fn identity(provider: Arc<dyn EmbeddingProvider>) -> Self {
        let d = provider.dim();
        Self { provider, w_rel: Array2::eye(d), w_tup: Array2::eye(d) }
    }

    pub fn from_matrices(provider: Arc<dyn EmbeddingProvider>, w_rel: Array2<f64>, w_tup: Array2<f64>) -> Result<Self> {
        let d = provider.dim();
        for w in [&w_rel, &w_tup] {
            if w.dim() != (d, d) {
                return Err(Error::DimensionMismatch { expected: d, actual: w.nrows() });
            }
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::ModelFormat("non-finite weight".into()));
            }
        }
        Ok(Self { provider, w_rel, w_tup })
    }

    pub fn dim(&self) -> usize {
        self.w_rel.nrows()
    }

    pub fn provider(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.provider
    }

    pub fn relation_map(&self) -> &Array2<f64> {
        &self.w_rel
    }

    pub fn tuple_map(&self) -> &Array2<f64> {
        &self.w_tup
    }

    /// Embeds texts, checking the provider's output dimension.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Array1<f64>>> {
        let d = self.dim();
        self.provider
            .embed(texts)?
            .into_iter()
            .map(|v| {
                if v.len() != d {
                    Err(Error::DimensionMismatch { expected: d, actual: v.len() })
                } else {
                    Ok(Array1::from(v))
                }
            })
            .collect()
    }

    /// Pre-sigmoid score from precomputed embeddings.
    pub fn theta(&self, relation: ArrayView1<f64>, tuple: ArrayView1<f64>) -> f64 {
        self.w_rel.dot(&relation).dot(&self.w_tup.dot(&tuple))
    }

    /// Pre-sigmoid score of a fact.
    pub fn theta_fact(&self, fact: &Fact) -> Result<f64> {
        let tuple_text = fact.tuple.text();
        let v = self.embed(&[fact.relation.as_str(), tuple_text.as_str()])?;
        Ok(self.theta(v[0].view(), v[1].view()))
    }

    /// Probabilities for many facts with one embedding call.
    pub fn score_facts(&self, facts: &[Fact]) -> Result<Vec<f64>> {
        if facts.is_empty() {
            return Ok(Vec::new());
        }
        let tuple_texts: Vec<String> = facts.iter().map(|f| f.tuple.text()).collect();
        let mut texts: Vec<&str> = facts.iter().map(|f| f.relation.as_str()).collect();
        texts.extend(tuple_texts.iter().map(String::as_str));
        let v = self.embed(&texts)?;
        let n = facts.len();
        Ok((0..n).map(|i| probability(self.theta(v[i].view(), v[n + i].view()))).collect())
    }

    /// Writes the model and an optional set of known facts to a single binary file.
    ///
    /// Layout (little endian): magic `TCUS`, format version `u32`, provider id
    /// (`u32` length + UTF-8), `d` as `u64`, relation map then tuple map as `d*d`
    /// row-major `f64`, fact count `u64`, then each fact as three length-prefixed
    /// strings (subject, relation, object).
    pub fn save(&self, path: &Path, facts: &[Fact]) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf, facts);
        std::fs::write(path, buf).map_err(|e| Error::io(path, e))
    }

    fn write_to(&self, out: &mut Vec<u8>, facts: &[Fact]) {
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        write_str(out, self.provider.id());
        out.extend_from_slice(&(self.dim() as u64).to_le_bytes());
        for w in [&self.w_rel, &self.w_tup] {
            for x in w.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out.extend_from_slice(&(facts.len() as u64).to_le_bytes());
        for f in facts {
            write_str(out, &f.tuple.subject);
            write_str(out, &f.relation);
            write_str(out, &f.tuple.object);
        }
    }

    /// Reads a model written by [`USchemaModel::save`]. `resolve` maps the stored
    /// provider id to a provider instance.
    pub fn load(
        path: &Path,
        resolve: impl FnOnce(&str) -> Result<Arc<dyn EmbeddingProvider>>,
    ) -> Result<(Self, Vec<Fact>)> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::read_from(&bytes, resolve)
    }

    fn read_from(
        bytes: &[u8],
        resolve: impl FnOnce(&str) -> Result<Arc<dyn EmbeddingProvider>>,
    ) -> Result<(Self, Vec<Fact>)> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let provider_id = r.string()?;
        let d = r.u64()? as usize;
        let provider = resolve(&provider_id)?;
        if provider.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: provider.dim() });
        }
        let mut read_matrix = || -> Result<Array2<f64>> {
            let mut data = Vec::with_capacity(d * d);
            for _ in 0..d * d {
                data.push(f64::from_le_bytes(r.take(8)?.try_into().unwrap()));
            }
            Array2::from_shape_vec((d, d), data).map_err(|e| Error::ModelFormat(e.to_string()))
        };
        let w_rel = read_matrix()?;
        let w_tup = read_matrix()?;
        let n = r.u64()? as usize;
        let mut facts = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let s = r.string()?;
            let rel = r.string()?;
            let o = r.string()?;
            facts.push(Fact::new(&s, &rel, &o)?);
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat("trailing bytes".into()));
        }
        Ok((Self::from_matrices(provider, w_rel, w_tup)?, facts))
    }
}

/// Logistic of a raw score, kept strictly inside `(0, 1)`.
pub fn probability(theta: f64) -> f64 {
    sigmoid(theta).clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

/// Probability that `fact` holds under `model`.
pub fn score_fact(model: &USchemaModel, fact: &Fact) -> Result<f64> {
    Ok(probability(model.theta_fact(fact)?))
}

const MAGIC: &[u8; 4] = b"TCUS";
const FORMAT_VERSION: u32 = 1;

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::ModelFormat("truncated file".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| Error::ModelFormat(e.to_string()))
    }
}

impl USchemaModel {
    /// Serializes into an in-memory buffer (same layout as [`USchemaModel::save`]).
    pub fn to_bytes(&self, facts: &[Fact]) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf, facts);
        buf
    }

    pub fn from_bytes(
        bytes: &[u8],
        resolve: impl FnOnce(&str) -> Result<Arc<dyn EmbeddingProvider>>,
    ) -> Result<(Self, Vec<Fact>)> {
        Self::read_from(bytes, resolve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::HashedEmbedder;

    fn provider(d: usize) -> Arc<dyn EmbeddingProvider> {
        Arc::new(HashedEmbedder::new(d))
    }

    #[test]
    fn bpr_reference_values() {
        assert!((bpr_loss(0.3, 0.3) - std::f64::consts::LN_2).abs() < 1e-12);
        // softplus(-20) and softplus(10) evaluated in extended precision
        assert!((bpr_loss(20.0, 0.0) - 2.061_153_620_314_381_5e-9).abs() < 1e-20);
        assert!((bpr_loss(-10.0, 0.0) - 10.000_045_398_899_218).abs() < 1e-12);
        assert!(bpr_loss(-1000.0, 0.0).is_finite());
        assert!(bpr_loss(1000.0, 0.0) >= 0.0);
    }

    #[test]
    fn zero_maps_score_half() {
        let p = provider(8);
        let m = USchemaModel::from_matrices(p, Array2::zeros((8, 8)), Array2::zeros((8, 8))).unwrap();
        let f = Fact::new("a", "r", "b").unwrap();
        assert_eq!(score_fact(&m, &f).unwrap(), 0.5);
    }

    #[test]
    fn orthogonal_embeddings_score_half() {
        // relation and tuple share no words; find a dimension where their hashed
        // buckets do not collide
        let p = provider(64);
        let rel = p.embed(&["directed"]).unwrap().remove(0);
        let tup = p.embed(&["tremors ron"]).unwrap().remove(0);
        let dot: f64 = rel.iter().zip(&tup).map(|(a, b)| a * b).sum();
        assert_eq!(dot, 0.0);
        let m = USchemaModel::identity(p);
        let f = Fact::new("tremors", "directed", "ron").unwrap();
        assert_eq!(score_fact(&m, &f).unwrap(), 0.5);
    }

    #[test]
    fn scores_stay_strictly_inside_unit_interval() {
        assert!(probability(1e6) < 1.0);
        assert!(probability(-1e6) > 0.0);
        assert!(probability(40.0) < 1.0);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let m = USchemaModel::identity(provider(8));
        let other = USchemaModel::from_matrices(provider(4), Array2::eye(8), Array2::eye(8));
        assert!(matches!(other, Err(Error::DimensionMismatch { .. })));
        assert_eq!(m.dim(), 8);
    }

    #[test]
    fn persistence_round_trips_bit_exactly() {
        let p = provider(6);
        let w_rel = Array2::from_shape_fn((6, 6), |(i, j)| (i as f64 * 0.1 - j as f64).sin() / 3.0);
        let w_tup = Array2::from_shape_fn((6, 6), |(i, j)| 1.0 / (1.0 + i as f64 + 7.0 * j as f64));
        let m = USchemaModel::from_matrices(p, w_rel, w_tup).unwrap();
        let facts = vec![Fact::new("Tremors", "directed by", "Ron Underwood").unwrap()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.bin");
        m.save(&path, &facts).unwrap();
        let (loaded, loaded_facts) = USchemaModel::load(&path, |id| {
            Ok(Arc::new(HashedEmbedder::from_id(id).unwrap()) as Arc<dyn EmbeddingProvider>)
        })
        .unwrap();
        assert_eq!(loaded_facts, facts);
        assert_eq!(loaded.provider().id(), "hashed-bow-6");
        let bits = |a: &Array2<f64>| a.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(loaded.relation_map()), bits(m.relation_map()));
        assert_eq!(bits(loaded.tuple_map()), bits(m.tuple_map()));
        assert_eq!(loaded.to_bytes(&facts), m.to_bytes(&facts));
    }

    #[test]
    fn corrupt_artifacts_rejected() {
        let m = USchemaModel::identity(provider(2));
        let bytes = m.to_bytes(&[]);
        let resolve = |_: &str| Ok(provider(2));
        assert!(USchemaModel::from_bytes(&bytes[..bytes.len() - 1], resolve).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(USchemaModel::from_bytes(&bad, resolve).is_err());
        assert!(USchemaModel::from_bytes(&bytes, |_: &str| Ok(provider(3))).is_err());
    }
}
