//! Task heads, training loops and metrics for classification, clone
//! detection and code search, plus the bag-of-words similarity probe.

mod heads;
mod metrics;
mod probe;
mod train;

pub use heads::{cosine_rows, encode_all, search_similarity, ClassifierHead, CloneHead, QueryEncoder, Similarity};
pub use metrics::{accuracy, candidate_pool, rank_metrics, rank_of, Confusion, MetricsReport, TaskKind};
pub use probe::{textual_similarity, ProbeConfig, WordVectors};
pub use train::{Classifier, CloneModel, EpochLog, PairRef, QueryRef, SearchModel, TrainConfig, TrainLog};
