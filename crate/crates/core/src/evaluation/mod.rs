pub mod bench;
pub mod metrics;
pub mod synth;

pub use bench::{bench_scaling, BenchConfig, BenchError, BenchPoint, BenchReport};
pub use metrics::{matching_prf, predicted_pairs, GoldError, GoldPairs, MatchScore, ScoreReport};
