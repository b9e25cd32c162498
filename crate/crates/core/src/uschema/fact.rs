use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Triple;

/// Entity pair a relation may hold for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityTuple {
    pub subject: String,
    pub object: String,
}

impl EntityTuple {
    /// Text fed to the embedding provider: subject and object joined by a space.
    pub fn text(&self) -> String {
        format!("{} {}", self.subject, self.object)
    }
}

/// A relation instance: `relation` holds for `tuple`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub relation: String,
    pub tuple: EntityTuple,
}

impl Fact {
    pub fn new(subject: &str, relation: &str, object: &str) -> Result<Self> {
        for (field, value) in [("subject", subject), ("relation", relation), ("object", object)] {
            if value.trim().is_empty() {
                return Err(Error::EmptyField(field));
            }
        }
        Ok(Self {
            relation: relation.to_string(),
            tuple: EntityTuple { subject: subject.to_string(), object: object.to_string() },
        })
    }

    pub fn from_triple(t: &Triple) -> Self {
        Self {
            relation: t.relation().to_string(),
            tuple: EntityTuple { subject: t.subject().to_string(), object: t.object().to_string() },
        }
    }

    pub fn to_triple(&self) -> Result<Triple> {
        Triple::new(&self.tuple.subject, &self.relation, &self.tuple.object)
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.relation, self.tuple.subject, self.tuple.object)
    }
}

/// Reads `subject<TAB>relation<TAB>object` lines (UTF-8, no header).
pub fn load_kg_tsv(path: &Path) -> Result<Vec<Fact>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut facts = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::parse(path, i + 1, format!("expected 3 tab-separated columns, found {}", cols.len())));
        }
        let fact = Fact::new(cols[0], cols[1], cols[2]).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        facts.push(fact);
    }
    Ok(facts)
}

/// Known positive facts, interned by relation and tuple.
///
/// Tuples are kept in first-insertion order, so sampling under a fixed seed does not
/// depend on hash iteration order.
#[derive(Debug, Clone, Default)]
pub struct FactStore {
    relations: Vec<String>,
    relation_ids: HashMap<String, usize>,
    tuples: Vec<EntityTuple>,
    tuple_ids: HashMap<EntityTuple, usize>,
    positives: HashSet<(usize, usize)>,
    positives_per_relation: Vec<usize>,
}

/// Rejection attempts before falling back to enumerating the allowed tuples.
const REJECTION_TRIES: usize = 64;

impl FactStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_facts<'a>(facts: impl IntoIterator<Item = &'a Fact>) -> Self {
        let mut store = Self::new();
        for f in facts {
            store.insert(f);
        }
        store
    }

    pub fn intern_relation(&mut self, relation: &str) -> usize {
        if let Some(&id) = self.relation_ids.get(relation) {
            return id;
        }
        let id = self.relations.len();
        self.relations.push(relation.to_string());
        self.relation_ids.insert(relation.to_string(), id);
        self.positives_per_relation.push(0);
        id
    }

    pub fn intern_tuple(&mut self, tuple: &EntityTuple) -> usize {
        if let Some(&id) = self.tuple_ids.get(tuple) {
            return id;
        }
        let id = self.tuples.len();
        self.tuples.push(tuple.clone());
        self.tuple_ids.insert(tuple.clone(), id);
        id
    }

    /// Adds a positive fact; returns its `(relation id, tuple id)`.
    pub fn insert(&mut self, fact: &Fact) -> (usize, usize) {
        let r = self.intern_relation(&fact.relation);
        let t = self.intern_tuple(&fact.tuple);
        if self.positives.insert((r, t)) {
            self.positives_per_relation[r] += 1;
        }
        (r, t)
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        match (self.relation_ids.get(&fact.relation), self.tuple_ids.get(&fact.tuple)) {
            (Some(&r), Some(&t)) => self.positives.contains(&(r, t)),
            _ => false,
        }
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn tuples(&self) -> &[EntityTuple] {
        &self.tuples
    }

    pub fn relation_id(&self, relation: &str) -> Option<usize> {
        self.relation_ids.get(relation).copied()
    }

    pub fn tuple_id(&self, tuple: &EntityTuple) -> Option<usize> {
        self.tuple_ids.get(tuple).copied()
    }

    pub fn is_positive(&self, relation: usize, tuple: usize) -> bool {
        self.positives.contains(&(relation, tuple))
    }

    pub fn num_positives(&self) -> usize {
        self.positives.len()
    }

    /// Uniformly samples a tuple id that is not a known positive for `relation`.
    /// A relation id outside the store has no positives.
    pub fn sample_negative_tuple<R: Rng + ?Sized>(&self, relation: Option<usize>, rng: &mut R) -> Result<usize> {
        let n = self.tuples.len();
        if n < 2 {
            return Err(Error::TooFewTuples);
        }
        let Some(r) = relation else {
            return Ok(rng.random_range(0..n));
        };
        let taken = self.positives_per_relation[r];
        if taken >= n {
            return Err(Error::NoNegativeAvailable(self.relations[r].clone()));
        }
        for _ in 0..REJECTION_TRIES {
            let t = rng.random_range(0..n);
            if !self.positives.contains(&(r, t)) {
                return Ok(t);
            }
        }
        let allowed: Vec<usize> = (0..n).filter(|t| !self.positives.contains(&(r, *t))).collect();
        Ok(allowed[rng.random_range(0..allowed.len())])
    }
}

/// Keeps the positive's relation and swaps in a uniformly drawn tuple that is not a
/// known positive for that relation.
pub fn sample_negative<R: Rng + ?Sized>(positive: &Fact, store: &FactStore, rng: &mut R) -> Result<Fact> {
    let t = store.sample_negative_tuple(store.relation_id(&positive.relation), rng)?;
    Ok(Fact { relation: positive.relation.clone(), tuple: store.tuples[t].clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fact(s: &str, r: &str, o: &str) -> Fact {
        Fact::new(s, r, o).unwrap()
    }

    #[test]
    fn only_choice_is_returned() {
        let store = FactStore::from_facts(&[fact("A", "r", "a"), fact("B", "q", "b")]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let neg = sample_negative(&fact("A", "r", "a"), &store, &mut rng).unwrap();
            assert_eq!(neg, fact("B", "r", "b"));
        }
    }

    #[test]
    fn saturated_relation_has_no_negative() {
        let store = FactStore::from_facts(&[fact("A", "r", "a"), fact("B", "r", "b")]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_negative(&fact("A", "r", "a"), &store, &mut rng),
            Err(Error::NoNegativeAvailable(_))
        ));
    }

    #[test]
    fn single_tuple_store_rejected() {
        let store = FactStore::from_facts(&[fact("A", "r", "a")]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_negative(&fact("A", "q", "a"), &store, &mut rng), Err(Error::TooFewTuples)));
    }

    #[test]
    fn sampling_is_seeded() {
        let facts: Vec<Fact> = (0..30).map(|i| fact(&format!("s{i}"), "r", &format!("o{i}"))).collect();
        let mut store = FactStore::from_facts(&facts[..5]);
        for f in &facts[5..] {
            store.intern_tuple(&f.tuple);
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| sample_negative(&facts[0], &store, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert!(draw(3).iter().all(|f| !store.contains(f)));
    }

    #[test]
    fn kg_tsv_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kg.tsv");
        std::fs::write(&path, "Tremors\tdirected by\tRon Underwood\n\nA\tr\tB\n").unwrap();
        let facts = load_kg_tsv(&path).unwrap();
        assert_eq!(facts, vec![fact("Tremors", "directed by", "Ron Underwood"), fact("A", "r", "B")]);
        std::fs::write(&path, "A\tr\n").unwrap();
        assert!(matches!(load_kg_tsv(&path), Err(Error::Parse { line: 1, .. })));
    }
}
