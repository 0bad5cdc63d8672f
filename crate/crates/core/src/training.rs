//! Minibatch SGD on the mean equilibrium approximation, plus evaluation helpers.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{check_equivariance, ApproximatorModel, EquivarianceMode};
use crate::error::{Error, Result};
use crate::game::{random_game_permutation, Game, Strategy};
use crate::metrics::{approximation, social_welfare, SolutionConcept};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub concept: SolutionConcept,
    /// Steps between evaluations; 0 evaluates only after the last step.
    pub eval_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 2000,
            batch_size: 32,
            learning_rate: 0.1,
            seed: 0,
            concept: SolutionConcept::Ne,
            eval_every: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::invalid(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.concept == SolutionConcept::Ce {
            return Err(Error::Concept("training supports the ne and cce losses".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Number of SGD updates applied before this record (1-based).
    pub step: usize,
    /// Mean loss of the minibatch used at this step, before the update.
    pub loss: f64,
    /// Mean approximation on the evaluation set after the update.
    pub eval_mean: Option<f64>,
    /// Worst symmetry violation after the update (equivariant models only).
    pub equivariance_dev: Option<f64>,
}

/// Per-step records plus wall-clock times kept apart so that records from
/// runs with equal seeds compare equal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub wall_seconds: Vec<f64>,
}

impl TrainTrace {
    pub fn final_loss(&self) -> Option<f64> {
        self.records.last().map(|r| r.loss)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,eval_mean,equivariance_dev,wall_seconds\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (r, t) in self.records.iter().zip(&self.wall_seconds) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.step,
                r.loss,
                opt(r.eval_mean),
                opt(r.equivariance_dev),
                t
            );
        }
        out
    }
}

/// Runs SGD for `config.iterations` steps on `train_set`.
pub fn train(
    model: ApproximatorModel,
    train_set: &[Game],
    config: &TrainConfig,
) -> Result<(ApproximatorModel, TrainTrace)> {
    train_with_eval(model, train_set, None, config)
}

/// As [`train`], additionally logging the mean approximation on `eval_set`.
pub fn train_with_eval(
    mut model: ApproximatorModel,
    train_set: &[Game],
    eval_set: Option<&[Game]>,
    config: &TrainConfig,
) -> Result<(ApproximatorModel, TrainTrace)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::invalid("training set is empty"));
    }
    for g in train_set.iter().chain(eval_set.unwrap_or(&[])) {
        model.shape().check_same(g.shape(), "training game")?;
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    // Symmetry probes use their own stream so they never perturb batching.
    let mut probe_rng = ChaCha20Rng::seed_from_u64(config.seed);
    probe_rng.set_stream(1);

    let batch = config.batch_size.min(train_set.len());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    order.shuffle(&mut rng);
    let mut pos = 0;
    let mut trace = TrainTrace::default();
    let start = Instant::now();
    for step in 1..=config.iterations {
        if pos + batch > order.len() {
            order.shuffle(&mut rng);
            pos = 0;
        }
        let games: Vec<&Game> = order[pos..pos + batch].iter().map(|&i| &train_set[i]).collect();
        pos += batch;
        let (loss, grad) = model.batch_loss_and_gradient(&games, config.concept)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("loss is {loss} at step {step}")));
        }
        model.params_mut().step(&grad, config.learning_rate);

        let due = step == config.iterations || (config.eval_every > 0 && step % config.eval_every == 0);
        let (eval_mean, equivariance_dev) = if due {
            let eval_mean = match eval_set {
                Some(set) if !set.is_empty() => Some(evaluate(&model, set, config.concept)?.mean),
                _ => None,
            };
            let dev = if model.mode() == EquivarianceMode::General {
                None
            } else {
                let probe = &train_set[0];
                let rho = random_game_permutation(probe.shape(), &mut probe_rng);
                Some(check_equivariance(&model, probe, &rho, model.mode())?)
            };
            (eval_mean, dev)
        } else {
            (None, None)
        };
        trace.records.push(TraceRecord {
            step,
            loss,
            eval_mean,
            equivariance_dev,
        });
        trace.wall_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok((model, trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub count: usize,
    pub mean: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
    pub mean_welfare: f64,
}

/// Approximation statistics of `strategy_of` over `games`, in list order.
pub fn evaluate_with(
    games: &[Game],
    concept: SolutionConcept,
    strategy_of: impl Fn(&Game) -> Result<Strategy>,
) -> Result<EvalSummary> {
    if games.is_empty() {
        return Err(Error::invalid("evaluation set is empty"));
    }
    let mut gaps = Vec::with_capacity(games.len());
    let mut welfare = 0.0;
    for g in games {
        let s = strategy_of(g)?;
        gaps.push(approximation(g, &s, concept)?);
        welfare += social_welfare(g, &s)?;
    }
    let n = games.len() as f64;
    let mean = gaps.iter().sum::<f64>() / n;
    let var = gaps.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(EvalSummary {
        count: games.len(),
        mean,
        max: gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        std: var.sqrt(),
        mean_welfare: welfare / n,
    })
}

pub fn evaluate(model: &ApproximatorModel, games: &[Game], concept: SolutionConcept) -> Result<EvalSummary> {
    for g in games {
        model.shape().check_same(g.shape(), "evaluation game")?;
    }
    evaluate_with(games, concept, |g| model.forward(g))
}

/// Mean test approximation minus mean train approximation.
pub fn generalization_gap(
    model: &ApproximatorModel,
    train_set: &[Game],
    test_set: &[Game],
    concept: SolutionConcept,
) -> Result<f64> {
    Ok(evaluate(model, test_set, concept)?.mean - evaluate(model, train_set, concept)?.mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{HeadKind, Init, ModelConfig};
    use crate::distributions::{named_game, sample, DistributionSpec};
    use crate::game::{GameShape, JointStrategy, ProductStrategy};
    use crate::solvers::enumerate_pure_ne;

    fn small_model(shape: &str, head: HeadKind, mode: EquivarianceMode) -> ApproximatorModel {
        let config = ModelConfig {
            hidden: vec![16, 16],
            head,
            mode,
            init: Init::Xavier { seed: 3 },
            ..ModelConfig::default()
        };
        ApproximatorModel::new(shape.parse().unwrap(), &config).unwrap()
    }

    fn games(shape: &str, count: usize, seed: u64) -> Vec<Game> {
        sample(&DistributionSpec::uniform(shape.parse().unwrap(), seed), count).unwrap()
    }

    #[test]
    fn zero_iterations_and_zero_rate_leave_the_model_alone() {
        let m = small_model("2x2", HeadKind::Product, EquivarianceMode::General);
        let data = games("2x2", 20, 1);
        let cfg = TrainConfig {
            iterations: 0,
            ..TrainConfig::default()
        };
        let (out, trace) = train(m.clone(), &data, &cfg).unwrap();
        assert_eq!(out, m);
        assert!(trace.records.is_empty());
        let cfg = TrainConfig {
            iterations: 25,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (out, trace) = train(m.clone(), &data, &cfg).unwrap();
        assert_eq!(out.params(), m.params());
        assert_eq!(trace.records.len(), 25);
    }

    #[test]
    fn traces_are_deterministic() {
        let m = small_model("2x3", HeadKind::Product, EquivarianceMode::Both);
        let data = games("2x3", 40, 2);
        let cfg = TrainConfig {
            iterations: 30,
            batch_size: 8,
            eval_every: 10,
            ..TrainConfig::default()
        };
        let (a, ta) = train_with_eval(m.clone(), &data, Some(&data[..10]), &cfg).unwrap();
        let (b, tb) = train_with_eval(m, &data, Some(&data[..10]), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta.records, tb.records);
        assert!(ta.records.windows(2).all(|w| w[0].step < w[1].step));
        assert_eq!(ta.records.iter().filter(|r| r.eval_mean.is_some()).count(), 3);
        for r in &ta.records {
            if let Some(d) = r.equivariance_dev {
                assert!(d <= 1e-9);
            }
        }
        let csv = ta.to_csv();
        assert_eq!(csv.lines().count(), 31);
        assert!(csv.starts_with("step,loss,eval_mean,equivariance_dev,wall_seconds\n"));
    }

    #[test]
    fn cce_training_runs_and_reduces_loss() {
        let m = small_model("2x2", HeadKind::Joint, EquivarianceMode::Pe);
        let data = games("2x2", 64, 3);
        let before = evaluate(&m, &data, SolutionConcept::Cce).unwrap().mean;
        let cfg = TrainConfig {
            iterations: 300,
            batch_size: 16,
            concept: SolutionConcept::Cce,
            ..TrainConfig::default()
        };
        let (m, _) = train(m, &data, &cfg).unwrap();
        let after = evaluate(&m, &data, SolutionConcept::Cce).unwrap().mean;
        assert!(after < before, "{after} >= {before}");
    }

    #[test]
    fn bad_configs_are_rejected() {
        let m = small_model("2x2", HeadKind::Product, EquivarianceMode::General);
        let data = games("2x2", 4, 4);
        let bad = [
            TrainConfig {
                batch_size: 0,
                ..TrainConfig::default()
            },
            TrainConfig {
                learning_rate: f64::NAN,
                ..TrainConfig::default()
            },
            TrainConfig {
                concept: SolutionConcept::Ce,
                ..TrainConfig::default()
            },
        ];
        for cfg in bad {
            assert!(train(m.clone(), &data, &cfg).is_err());
        }
        assert!(train(m.clone(), &[], &TrainConfig::default()).is_err());
        let wrong = games("3x2", 2, 5);
        assert!(matches!(
            train(m, &wrong, &TrainConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn evaluation_examples() {
        let id = named_game("identity2x2", &[]).unwrap();
        let zero = ApproximatorModel::new(
            id.shape().clone(),
            &ModelConfig {
                init: Init::Zeros,
                ..ModelConfig::default()
            },
        )
        .unwrap();
        let s = evaluate(&zero, std::slice::from_ref(&id), SolutionConcept::Ne).unwrap();
        assert_eq!((s.mean, s.max, s.std), (0.0, 0.0, 0.0));
        assert_eq!(s.mean_welfare, 1.0);

        // An oracle playing a pure equilibrium is exact.
        let data: Vec<Game> = games("3x3", 50, 6)
            .into_iter()
            .filter(|g| !enumerate_pure_ne(g).unwrap().is_empty())
            .collect();
        assert!(!data.is_empty());
        let oracle = |g: &Game| {
            let a = enumerate_pure_ne(g)?.remove(0);
            Ok(Strategy::Product(ProductStrategy::pure(g.shape(), &a)))
        };
        assert_eq!(evaluate_with(&data, SolutionConcept::Ne, oracle).unwrap().mean, 0.0);

        let m = small_model("2x2", HeadKind::Product, EquivarianceMode::General);
        let one = games("2x2", 1, 7);
        let s = evaluate(&m, &one, SolutionConcept::Ne).unwrap();
        assert_eq!(s.mean, s.max);
        assert_eq!(s.std, 0.0);
    }

    #[test]
    fn generalization_gap_examples() {
        let m = small_model("2x2", HeadKind::Product, EquivarianceMode::General);
        let a = games("2x2", 30, 8);
        let b = games("2x2", 30, 9);
        assert_eq!(generalization_gap(&m, &a, &a, SolutionConcept::Ne).unwrap(), 0.0);
        // A constant strategy's gap is the difference of its mean approximations.
        let shape: GameShape = "2x2".parse().unwrap();
        let fixed = Strategy::Joint(JointStrategy::uniform(&shape));
        let constant = |_: &Game| Ok(fixed.clone());
        let zero = ApproximatorModel::new(
            shape.clone(),
            &ModelConfig {
                head: HeadKind::Joint,
                init: Init::Zeros,
                ..ModelConfig::default()
            },
        )
        .unwrap();
        let want = evaluate_with(&b, SolutionConcept::Cce, constant).unwrap().mean
            - evaluate_with(&a, SolutionConcept::Cce, constant).unwrap().mean;
        let gap = generalization_gap(&zero, &a, &b, SolutionConcept::Cce).unwrap();
        assert!((gap - want).abs() < 1e-15);
    }
}
