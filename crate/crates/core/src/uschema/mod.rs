//! Universal-schema link prediction: scoring, ranking-loss training, gap filling.

mod fact;
mod gaps;
mod model;
mod train;

pub use fact::{load_kg_tsv, sample_negative, EntityTuple, Fact, FactStore};
pub use gaps::{bridging_candidates, fill_gaps, fill_gaps_scored, generate_candidates, GapFillConfig, ScoredCandidate};
pub use model::{bpr_loss, probability, score_fact, sigmoid, softplus, USchemaModel};
pub use train::{
    init_model, objective, objective_and_gradient, session_update, train, EmbeddingTable, EpochStats, Gradient,
    RankingPair, TrainConfig, TrainReport, Trained,
};
