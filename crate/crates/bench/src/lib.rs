//! Fixtures shared by the benchmarks.

use permeq::approximator::{ApproximatorModel, EquivarianceMode, HeadKind, Init, ModelConfig};
use permeq::distributions::{sample, DistributionSpec};
use permeq::{Game, GameShape};

pub const SEED: u64 = 7;

/// `count` uniform games of the given shape, e.g. `"3x3"`.
pub fn games(shape: &str, count: usize) -> Vec<Game> {
    let shape: GameShape = shape.parse().expect("valid shape");
    sample(&DistributionSpec::uniform(shape, SEED), count).expect("sampling succeeds")
}

pub fn model(shape: &GameShape, head: HeadKind, mode: EquivarianceMode) -> ApproximatorModel {
    let cfg = ModelConfig {
        hidden: vec![32, 32],
        head,
        mode,
        init: Init::Xavier { seed: SEED },
        ..ModelConfig::default()
    };
    ApproximatorModel::new(shape.clone(), &cfg).expect("valid model")
}
