//! Equilibrium-approximation losses and their subgradients with respect to
//! the strategy. The maximizing player and deviation are held fixed (lowest
//! index on ties).

use crate::game::{contract_except, dot, Game, JointStrategy, ProductStrategy};
use crate::metrics::{argmax, deviation_values_joint, deviation_values_product, top_margin};

pub(crate) struct LossGrad {
    pub loss: f64,
    /// Per-player gradients for product strategies, a single block for joint ones.
    pub grad: Vec<Vec<f64>>,
    /// Distance to the nearest change of the selected player or deviation.
    pub margin: f64,
}

/// `max_i [max_a u_i(a, σ_{-i}) - u_i(σ)]`.
pub(crate) fn ne_loss(game: &Game, sigma: &ProductStrategy) -> LossGrad {
    let n = game.num_players();
    let shape = game.shape();
    let devs: Vec<Vec<f64>> = (0..n).map(|i| deviation_values_product(game, i, sigma)).collect();
    let gaps: Vec<f64> = devs
        .iter()
        .enumerate()
        .map(|(i, d)| argmax(d).1 - dot(d, sigma.player(i)))
        .collect();
    let (star, loss) = argmax(&gaps);
    let (best, _) = argmax(&devs[star]);
    let margin = top_margin(&gaps).min(top_margin(&devs[star]));

    let u = game.payoffs(star);
    let mut pure = vec![0.0; shape.actions(star)];
    pure[best] = 1.0;
    let current: Vec<&[f64]> = sigma.players().iter().map(Vec::as_slice).collect();
    let mut deviated = current.clone();
    deviated[star] = &pure;
    let grad = (0..n)
        .map(|k| {
            if k == star {
                devs[star].iter().map(|v| -v).collect()
            } else {
                let with_dev = contract_except(shape, u, &deviated, k);
                let without = contract_except(shape, u, &current, k);
                with_dev.iter().zip(&without).map(|(a, b)| a - b).collect()
            }
        })
        .collect();
    LossGrad { loss, grad, margin }
}

/// `max_i [max_a Σ_b π(b) u_i(a, b_{-i}) - u_i(π)]`.
pub(crate) fn cce_loss(game: &Game, pi: &JointStrategy) -> LossGrad {
    let n = game.num_players();
    let shape = game.shape();
    let devs: Vec<Vec<f64>> = (0..n).map(|i| deviation_values_joint(game, i, pi)).collect();
    let gaps: Vec<f64> = devs
        .iter()
        .enumerate()
        .map(|(i, d)| argmax(d).1 - dot(game.payoffs(i), pi.probs()))
        .collect();
    let (star, loss) = argmax(&gaps);
    let (best, _) = argmax(&devs[star]);
    let margin = top_margin(&gaps).min(top_margin(&devs[star]));
    let u = game.payoffs(star);
    let grad = (0..shape.num_joint())
        .map(|a| u[shape.with_action(a, star, best)] - u[a])
        .collect();
    LossGrad {
        loss,
        grad: vec![grad],
        margin,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::uniform_game;
    use crate::game::{GameShape, Strategy};
    use crate::metrics::{approximation, SolutionConcept};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() + 0.05).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn ne_loss_matches_metric_and_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for counts in [vec![2, 2], vec![3, 2], vec![2, 2, 3]] {
            let shape = GameShape::new(counts).unwrap();
            let g = uniform_game(&shape, &mut rng);
            let raw: Vec<Vec<f64>> = shape
                .action_counts()
                .iter()
                .map(|&m| random_simplex(m, &mut rng))
                .collect();
            let sigma = ProductStrategy::from_raw(raw.clone());
            let lg = ne_loss(&g, &sigma);
            let metric = approximation(&g, &Strategy::Product(sigma.clone()), SolutionConcept::Ne).unwrap();
            assert!((lg.loss - metric).abs() < 1e-12);
            assert!(lg.margin > 1e-4);
            // The loss is piecewise multilinear; probe it off the simplex.
            let h = 1e-6;
            for k in 0..raw.len() {
                for a in 0..raw[k].len() {
                    let mut up = raw.clone();
                    up[k][a] += h;
                    let mut down = raw.clone();
                    down[k][a] -= h;
                    let fd = (ne_loss(&g, &ProductStrategy::from_raw(up)).loss
                        - ne_loss(&g, &ProductStrategy::from_raw(down)).loss)
                        / (2.0 * h);
                    assert!((fd - lg.grad[k][a]).abs() < 1e-6, "{fd} vs {}", lg.grad[k][a]);
                }
            }
        }
    }

    #[test]
    fn cce_loss_matches_metric_and_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape: GameShape = "3x2".parse().unwrap();
        let g = uniform_game(&shape, &mut rng);
        let probs = random_simplex(6, &mut rng);
        let pi = JointStrategy::from_raw(shape.clone(), probs.clone());
        let lg = cce_loss(&g, &pi);
        let metric = approximation(&g, &Strategy::Joint(pi), SolutionConcept::Cce).unwrap();
        assert!((lg.loss - metric).abs() < 1e-12);
        for a in 0..6 {
            let mut up = probs.clone();
            up[a] += 1e-6;
            let mut down = probs.clone();
            down[a] -= 1e-6;
            let fd = (cce_loss(&g, &JointStrategy::from_raw(shape.clone(), up)).loss
                - cce_loss(&g, &JointStrategy::from_raw(shape.clone(), down)).loss)
                / 2e-6;
            assert!((fd - lg.grad[0][a]).abs() < 1e-6);
        }
    }
}
