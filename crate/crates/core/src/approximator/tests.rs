use super::*;
use crate::distributions::{named_game, uniform_game};
use crate::game::{enumerate_group, random_game_permutation};
use crate::metrics::approximation;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(shape: &str, head: HeadKind, mode: EquivarianceMode, width: usize, seed: u64) -> ApproximatorModel {
    let config = ModelConfig {
        hidden: vec![width, width],
        head,
        mode,
        init: Init::Xavier { seed },
        ..ModelConfig::default()
    };
    ApproximatorModel::new(shape.parse().unwrap(), &config).unwrap()
}

fn random_games(shape: &str, count: usize, seed: u64) -> Vec<Game> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape: GameShape = shape.parse().unwrap();
    (0..count).map(|_| uniform_game(&shape, &mut rng)).collect()
}

fn product_distance(a: &ProductStrategy, b: &ProductStrategy) -> f64 {
    a.players()
        .iter()
        .zip(b.players())
        .map(|(x, y)| max_abs_diff(x, y))
        .fold(0.0, f64::max)
}

#[test]
fn zero_weights_give_uniform_outputs() {
    let g = named_game("matching_pennies", &[]).unwrap();
    let config = ModelConfig {
        init: Init::Zeros,
        ..ModelConfig::default()
    };
    let m = ApproximatorModel::new(g.shape().clone(), &config).unwrap();
    let s = m.forward_product(&g).unwrap();
    assert_eq!(s.players(), &[vec![0.5, 0.5], vec![0.5, 0.5]]);
    let config = ModelConfig {
        head: HeadKind::Joint,
        init: Init::Zeros,
        ..ModelConfig::default()
    };
    let m = ApproximatorModel::new(g.shape().clone(), &config).unwrap();
    assert_eq!(m.forward_joint(&g).unwrap().probs(), &[0.25; 4]);
}

#[test]
fn head_and_mode_must_agree() {
    let shape: GameShape = "2x2".parse().unwrap();
    for (head, mode, ok) in [
        (HeadKind::Product, EquivarianceMode::Pe, false),
        (HeadKind::Joint, EquivarianceMode::Both, false),
        (HeadKind::Joint, EquivarianceMode::Opi, false),
        (HeadKind::Joint, EquivarianceMode::Pe, true),
        (HeadKind::Product, EquivarianceMode::Ppe, true),
        (HeadKind::Joint, EquivarianceMode::General, true),
    ] {
        let config = ModelConfig {
            head,
            mode,
            hidden: vec![4],
            ..ModelConfig::default()
        };
        assert_eq!(
            ApproximatorModel::new(shape.clone(), &config).is_ok(),
            ok,
            "{head} {mode}"
        );
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let m = model("2x2", HeadKind::Product, EquivarianceMode::General, 4, 0);
    let g = named_game("swr3x3", &[0.1]).unwrap();
    assert!(matches!(m.forward(&g), Err(Error::Dimension(_))));
    assert!(m.loss_and_gradient(&g, SolutionConcept::Ne).is_err());
    assert!(matches!(
        m.loss_and_gradient(&named_game("identity2x2", &[]).unwrap(), SolutionConcept::Cce),
        Err(Error::Concept(_))
    ));
}

#[test]
fn both_mode_is_uniform_on_the_identity_game() {
    let g = named_game("identity2x2", &[]).unwrap();
    for seed in 0..5 {
        let m = model("2x2", HeadKind::Product, EquivarianceMode::Both, 16, seed);
        let s = m.forward_product(&g).unwrap();
        for p in 0..2 {
            assert!((s.player(p)[0] - 0.5).abs() < 1e-12);
        }
    }
}

#[test]
fn planned_projections_match_composed_operators() {
    for (shape, seed) in [("2x2", 1), ("3x2", 2), ("2x2x2", 3)] {
        let general = model(shape, HeadKind::Product, EquivarianceMode::General, 8, seed);
        let base = |g: &Game| general.forward_product(g);
        let opi = general.with_mode(EquivarianceMode::Opi).unwrap();
        let ppe = general.with_mode(EquivarianceMode::Ppe).unwrap();
        let both = general.with_mode(EquivarianceMode::Both).unwrap();
        for g in random_games(shape, 3, seed) {
            let o = project_o(&base, &g).unwrap();
            assert!(product_distance(&o, &opi.forward_product(&g).unwrap()) < 1e-12);
            let p = project_p(&base, &g).unwrap();
            assert!(product_distance(&p, &ppe.forward_product(&g).unwrap()) < 1e-12);
            let o_then_p = |u: &Game| project_o(&base, u);
            let po = project_p(&o_then_p, &g).unwrap();
            assert!(product_distance(&po, &both.forward_product(&g).unwrap()) < 1e-12);
            let p_then_o = |u: &Game| project_p(&base, u);
            let op = project_o(&p_then_o, &g).unwrap();
            assert!(product_distance(&op, &po) < 1e-12);
        }

        let joint = model(shape, HeadKind::Joint, EquivarianceMode::General, 8, seed);
        let pe = joint.with_mode(EquivarianceMode::Pe).unwrap();
        let base = |g: &Game| joint.forward_joint(g);
        for g in random_games(shape, 3, seed + 10) {
            let q = project_q(&base, &g).unwrap();
            assert!(max_abs_diff(q.probs(), pe.forward_joint(&g).unwrap().probs()) < 1e-12);
        }
    }
}

#[test]
fn projections_fix_symmetric_maps_and_are_idempotent() {
    let general = model("3x2", HeadKind::Product, EquivarianceMode::General, 8, 5);
    let opi = general.with_mode(EquivarianceMode::Opi).unwrap();
    let ppe = general.with_mode(EquivarianceMode::Ppe).unwrap();
    let pe = model("3x2", HeadKind::Joint, EquivarianceMode::Pe, 8, 5);
    let opi_map = |g: &Game| opi.forward_product(g);
    let ppe_map = |g: &Game| ppe.forward_product(g);
    let pe_map = |g: &Game| pe.forward_joint(g);
    let base = |g: &Game| general.forward_product(g);
    let once = |g: &Game| project_o(&base, g);
    let once_p = |g: &Game| project_p(&base, g);
    for g in random_games("3x2", 4, 6) {
        assert!(product_distance(&project_o(&opi_map, &g).unwrap(), &opi.forward_product(&g).unwrap()) < 1e-12);
        assert!(product_distance(&project_p(&ppe_map, &g).unwrap(), &ppe.forward_product(&g).unwrap()) < 1e-12);
        let q = project_q(&pe_map, &g).unwrap();
        assert!(max_abs_diff(q.probs(), pe.forward_joint(&g).unwrap().probs()) < 1e-12);
        assert!(product_distance(&project_o(&once, &g).unwrap(), &once(&g).unwrap()) < 1e-12);
        assert!(product_distance(&project_p(&once_p, &g).unwrap(), &once_p(&g).unwrap()) < 1e-12);
    }
    // Constant maps are unchanged by the joint projection.
    let shape: GameShape = "3x2".parse().unwrap();
    let fixed = JointStrategy::new(shape.clone(), vec![0.1, 0.2, 0.3, 0.05, 0.15, 0.2]).unwrap();
    let constant = |_: &Game| Ok(JointStrategy::uniform(&shape));
    let g = &random_games("3x2", 1, 7)[0];
    let q = project_q(&constant, g).unwrap();
    assert!(max_abs_diff(q.probs(), JointStrategy::uniform(&shape).probs()) < 1e-15);
    let lookup = |_: &Game| Ok(fixed.clone());
    let q = project_q(&lookup, g).unwrap();
    // The group acts transitively on cells, so any fixed distribution averages to uniform.
    assert!(q.probs().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-12));
}

#[test]
fn two_by_two_hand_averages() {
    // The base reads its strategies off the first payoff entries.
    let base = |g: &Game| {
        let a = g.payoffs(0)[0];
        let b = g.payoffs(1)[0];
        ProductStrategy::new(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]])
    };
    let g = Game::bimatrix(&[vec![0.2, 0.6], vec![0.9, 0.4]], &[vec![0.3, 0.7], vec![0.5, 0.1]]).unwrap();
    // O: player 0 averages over column swaps (u_1[0,0] in {0.2, 0.6}); player 1 over row swaps ({0.3, 0.5}).
    let o = project_o(&base, &g).unwrap();
    assert!(max_abs_diff(o.player(0), &[0.4, 0.6]) < 1e-12);
    assert!(max_abs_diff(o.player(1), &[0.4, 0.6]) < 1e-12);
    // P: player 0 averages (0.2, 0.8) with the swapped-back (0.1, 0.9)
    // reversed, i.e. (0.2+0.1)/2 for action 0.
    let p = project_p(&base, &g).unwrap();
    assert!(max_abs_diff(p.player(0), &[(0.2 + 0.1) / 2.0, (0.8 + 0.9) / 2.0]) < 1e-12);
    assert!(max_abs_diff(p.player(1), &[(0.3 + 0.3) / 2.0, (0.7 + 0.7) / 2.0]) < 1e-12);
    // Q on the joint map sending u to the point mass it pays player 0 most for.
    let joint_base = |g: &Game| {
        let (best, _) = crate::metrics::argmax(g.payoffs(0));
        Ok(JointStrategy::pure(g.shape(), &g.shape().decode(best)))
    };
    let q = project_q(&joint_base, &g).unwrap();
    // The best cell is (1, 0) in every permuted copy, so mapping back returns it each time.
    assert_eq!(q, JointStrategy::pure(g.shape(), &[1, 0]));
}

#[test]
fn identity_permutation_never_violates() {
    let g = &random_games("2x3", 1, 8)[0];
    let general = model("2x3", HeadKind::Product, EquivarianceMode::General, 8, 9);
    let id = GamePermutation::identity(2);
    for mode in [EquivarianceMode::Opi, EquivarianceMode::Ppe, EquivarianceMode::Both] {
        assert_eq!(check_equivariance(&general, g, &id, mode).unwrap(), 0.0);
    }
}

#[test]
fn general_models_are_not_equivariant() {
    let g = &random_games("2x3", 1, 10)[0];
    let general = model("2x3", HeadKind::Product, EquivarianceMode::General, 8, 11);
    let shape = g.shape();
    let worst = enumerate_group(shape, &[0, 1])
        .unwrap()
        .iter()
        .map(|rho| check_equivariance(&general, g, rho, EquivarianceMode::Both).unwrap())
        .fold(0.0, f64::max);
    assert!(worst > 1e-6);
    let joint = model("2x3", HeadKind::Joint, EquivarianceMode::General, 8, 11);
    let rho = GamePermutation::from_maps(vec![vec![1, 0], vec![2, 0, 1]]).unwrap();
    assert!(check_equivariance(&joint, g, &rho, EquivarianceMode::Pe).unwrap() > 1e-6);
    assert!(check_equivariance(&joint, g, &rho, EquivarianceMode::Both).is_err());
}

#[test]
fn projected_models_are_equivariant_for_every_permutation() {
    let games = random_games("3x2", 100, 12);
    let shape = games[0].shape().clone();
    let group = enumerate_group(&shape, &[0, 1]).unwrap();
    let product = model("3x2", HeadKind::Product, EquivarianceMode::General, 8, 13);
    let joint = model("3x2", HeadKind::Joint, EquivarianceMode::Pe, 8, 13);
    let modes = [EquivarianceMode::Opi, EquivarianceMode::Ppe, EquivarianceMode::Both];
    let projected: Vec<_> = modes.iter().map(|&m| product.with_mode(m).unwrap()).collect();
    for g in &games {
        for rho in &group {
            for (m, mode) in projected.iter().zip(modes) {
                assert!(check_equivariance(m, g, rho, mode).unwrap() <= 1e-9);
            }
            assert!(check_equivariance(&joint, g, rho, EquivarianceMode::Pe).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn sampled_orbits_are_flagged() {
    let m = model("7x2", HeadKind::Product, EquivarianceMode::Both, 4, 0);
    assert!(!m.is_exact());
    assert!(m.evaluations_per_forward() <= DEFAULT_ORBIT_SAMPLES);
    let g = &random_games("7x2", 1, 1)[0];
    let s = m.forward_product(g).unwrap();
    assert!(s.players().iter().all(|v| (v.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    assert!(model("3x3", HeadKind::Product, EquivarianceMode::Both, 4, 0).is_exact());
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn finite_difference(m: &ApproximatorModel, g: &Game, concept: SolutionConcept) -> Vec<f64> {
    let h = 1e-5;
    (0..m.num_params())
        .map(|k| {
            let mut up = m.clone();
            up.params_mut().as_mut_slice()[k] += h;
            let mut down = m.clone();
            down.params_mut().as_mut_slice()[k] -= h;
            let lu = up.loss_and_gradient(g, concept).unwrap().0;
            let ld = down.loss_and_gradient(g, concept).unwrap().0;
            (lu - ld) / (2.0 * h)
        })
        .collect()
}

#[test]
fn gradients_match_finite_differences() {
    let cases = [
        ("2x2", HeadKind::Product, EquivarianceMode::General, SolutionConcept::Ne),
        ("2x2", HeadKind::Product, EquivarianceMode::Both, SolutionConcept::Ne),
        ("3x2", HeadKind::Product, EquivarianceMode::Opi, SolutionConcept::Ne),
        ("2x3", HeadKind::Product, EquivarianceMode::Ppe, SolutionConcept::Ne),
        (
            "2x2x2",
            HeadKind::Product,
            EquivarianceMode::General,
            SolutionConcept::Ne,
        ),
        ("2x2", HeadKind::Joint, EquivarianceMode::General, SolutionConcept::Cce),
        ("3x2", HeadKind::Joint, EquivarianceMode::Pe, SolutionConcept::Cce),
    ];
    let mut checked = 0;
    for (i, (shape, head, mode, concept)) in cases.into_iter().enumerate() {
        let m = model(shape, head, mode, 6, 20 + i as u64);
        for g in random_games(shape, 3, 30 + i as u64) {
            if m.argmax_margin(&g, concept).unwrap() <= 1e-6 {
                continue;
            }
            let (_, grad) = m.loss_and_gradient(&g, concept).unwrap();
            let fd = finite_difference(&m, &g, concept);
            let err = relative_error(&grad, &fd);
            assert!(err <= 1e-4, "{shape} {mode}: relative error {err}");
            checked += 1;
        }
    }
    assert!(checked >= 15);
}

#[test]
fn constant_games_have_zero_gradient() {
    let shape: GameShape = "2x3".parse().unwrap();
    let g = Game::new(shape.clone(), vec![vec![0.4; 6], vec![0.4; 6]]).unwrap();
    let m = model("2x3", HeadKind::Product, EquivarianceMode::General, 8, 40);
    let (loss, grad) = m.loss_and_gradient(&g, SolutionConcept::Ne).unwrap();
    assert!(loss.abs() < 1e-15);
    assert!(grad.iter().all(|v| v.abs() < 1e-15));
    let j = model("2x3", HeadKind::Joint, EquivarianceMode::General, 8, 40);
    let (_, grad) = j.loss_and_gradient(&g, SolutionConcept::Cce).unwrap();
    assert!(grad.iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn duplicated_batches_have_the_same_gradient() {
    let g = &random_games("2x2", 1, 41)[0];
    let m = model("2x2", HeadKind::Product, EquivarianceMode::General, 8, 42);
    let (l1, g1) = m.batch_loss_and_gradient(&[g], SolutionConcept::Ne).unwrap();
    let (l2, g2) = m.batch_loss_and_gradient(&[g, g], SolutionConcept::Ne).unwrap();
    assert!((l1 - l2).abs() < 1e-15);
    assert!(max_abs_diff(&g1, &g2) < 1e-15);
    assert!(m.batch_loss_and_gradient(&[], SolutionConcept::Ne).is_err());
}

#[test]
fn loss_equals_the_approximation_metric() {
    let m = model("3x2", HeadKind::Product, EquivarianceMode::Both, 8, 43);
    for g in random_games("3x2", 5, 44) {
        let (loss, _) = m.loss_and_gradient(&g, SolutionConcept::Ne).unwrap();
        let metric = approximation(&g, &m.forward(&g).unwrap(), SolutionConcept::Ne).unwrap();
        assert!((loss - metric).abs() < 1e-12);
    }
}

#[test]
fn symmetric_games_force_symmetric_outputs() {
    // swr3x3 is fixed by swapping the first two actions of both players.
    let swr = named_game("swr3x3", &[0.05]).unwrap();
    let rho = GamePermutation::from_maps(vec![vec![1, 0, 2], vec![1, 0, 2]]).unwrap();
    assert_eq!(permute_game(&swr, &rho).unwrap(), swr);
    for seed in 0..3 {
        let both = model("3x3", HeadKind::Product, EquivarianceMode::Both, 8, seed);
        let s = both.forward_product(&swr).unwrap();
        let moved = permute_product(&s, &rho).unwrap();
        assert!(product_distance(&s, &moved) < 1e-9);
        let pe = model("3x3", HeadKind::Joint, EquivarianceMode::Pe, 8, seed);
        let pi = pe.forward_joint(&swr).unwrap();
        assert!(max_abs_diff(pi.probs(), permute_joint(&pi, &rho).unwrap().probs()) < 1e-9);
    }
}

/// Mean approximation of `m` over the orbit of `base`, one term per group element.
fn orbit_mean(m: &ApproximatorModel, base: &Game, concept: SolutionConcept) -> f64 {
    let group = enumerate_group(base.shape(), &(0..base.num_players()).collect::<Vec<_>>()).unwrap();
    let total: f64 = group
        .iter()
        .map(|rho| {
            let g = permute_game(base, rho).unwrap();
            approximation(&g, &m.forward(&g).unwrap(), concept).unwrap()
        })
        .sum();
    total / group.len() as f64
}

#[test]
fn projection_never_hurts_on_an_orbit() {
    for (i, base) in random_games("3x2", 10, 50).into_iter().enumerate() {
        let joint = model("3x2", HeadKind::Joint, EquivarianceMode::General, 8, 60 + i as u64);
        let pe = joint.with_mode(EquivarianceMode::Pe).unwrap();
        let before = orbit_mean(&joint, &base, SolutionConcept::Cce);
        let after = orbit_mean(&pe, &base, SolutionConcept::Cce);
        assert!(after <= before + 1e-9, "{after} > {before}");

        let opi = model("3x2", HeadKind::Product, EquivarianceMode::Opi, 8, 70 + i as u64);
        let both = opi.with_mode(EquivarianceMode::Both).unwrap();
        let before = orbit_mean(&opi, &base, SolutionConcept::Ne);
        let after = orbit_mean(&both, &base, SolutionConcept::Ne);
        assert!(after <= before + 1e-9, "{after} > {before}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn softmax_heads_emit_valid_strategies(seed in any::<u64>(), mode_idx in 0usize..4) {
        let mode = [EquivarianceMode::General, EquivarianceMode::Opi, EquivarianceMode::Ppe, EquivarianceMode::Both][mode_idx];
        let m = model("2x3", HeadKind::Product, mode, 8, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = uniform_game(m.shape(), &mut rng);
        let s = m.forward_product(&g).unwrap();
        for v in s.players() {
            prop_assert!(v.iter().all(|&x| x > 0.0));
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        let rho = random_game_permutation(m.shape(), &mut rng);
        if mode != EquivarianceMode::General {
            prop_assert!(check_equivariance(&m, &g, &rho, mode).unwrap() <= 1e-9);
        }
    }
}
