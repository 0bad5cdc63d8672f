//! Randomized property suite over games, metrics, solvers and approximators.
//!
//! Every check draws its cases from a seeded generator and records the worst
//! violation seen, so a failing run can be replayed exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{
    check_equivariance, project_o, project_p, project_q, ApproximatorModel, EquivarianceMode, HeadKind, Init,
    ModelConfig,
};
use crate::distributions::{named_game, uniform_game};
use crate::error::Result;
use crate::experiments::{exp_orbit_benefit, OrbitBenefitConfig, OrbitBenefitVariant};
use crate::game::{
    enumerate_group, expected_utility_joint, expected_utility_product, permute_game, permute_joint, permute_product,
    random_game_permutation, Game, GamePermutation, GameShape, JointStrategy, ProductStrategy, Strategy,
};
use crate::metrics::{
    approximation, exploitability_ce, exploitability_ce_enumerated, exploitability_ne, SolutionConcept,
};
use crate::solvers::{enumerate_pure_ne, max_welfare_equilibrium, support_enumeration_bimatrix};

/// Tolerance for identities that only reorder or re-associate arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for equivariance and inequality slack.
pub const SLACK_TOL: f64 = 1e-9;
pub const SOLVER_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-4;
/// Gradient checks skip points whose argmax margin is at most this.
pub const MIN_MARGIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

impl Level {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Level::Quick => quick,
            Level::Full => full,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest violation seen; a case fails when this exceeds `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            worst: 0.0,
            tolerance,
        }
    }

    fn record(&mut self, violation: f64) {
        self.cases += 1;
        if violation.is_nan() {
            self.worst = f64::NAN;
            self.failures += 1;
            return;
        }
        if !self.worst.is_nan() {
            self.worst = self.worst.max(violation);
        }
        if violation > self.tolerance {
            self.failures += 1;
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    pub fn failed(&self) -> Vec<&CheckResult> {
        self.checks.iter().filter(|c| !c.passed()).collect()
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A random shape with 2 or 3 players and 2 to `max_actions` actions each.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R, max_actions: usize) -> GameShape {
    let n = rng.random_range(2..=3);
    GameShape::new((0..n).map(|_| rng.random_range(2..=max_actions)).collect()).expect("at least two players")
}

/// A random point of the simplex; about one draw in ten is a vertex.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    if rng.random_bool(0.1) {
        let mut v = vec![0.0; m];
        v[rng.random_range(0..m)] = 1.0;
        return v;
    }
    let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

pub fn random_product<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> ProductStrategy {
    ProductStrategy::new(shape.action_counts().iter().map(|&m| random_simplex(rng, m)).collect())
        .expect("sampled on the simplex")
}

pub fn random_joint<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> JointStrategy {
    JointStrategy::new(shape.clone(), random_simplex(rng, shape.num_joint())).expect("sampled on the simplex")
}

pub fn random_game<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> Game {
    uniform_game(shape, rng)
}

fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn product_gap(a: &ProductStrategy, b: &ProductStrategy) -> f64 {
    a.players()
        .iter()
        .zip(b.players())
        .fold(0.0, |m, (x, y)| m.max(max_abs(x, y)))
}

/// `ρ⁻¹ρu = u` exactly, `ρ` preserves the entries of joint strategies, and
/// product and joint expected utilities agree.
pub fn check_game_algebra(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 1);
    let mut inverse = CheckResult::new("group_action_inverse", 0.0);
    let mut compat = CheckResult::new("utility_compatibility", EXACT_TOL);
    let mut outer = CheckResult::new("product_joint_utility", EXACT_TOL);
    let mut mass = CheckResult::new("joint_permutation_mass", 0.0);
    for _ in 0..cases {
        let shape = random_shape(&mut rng, 4);
        let g = random_game(&shape, &mut rng);
        let rho = random_game_permutation(&shape, &mut rng);
        let back = permute_game(&permute_game(&g, &rho)?, &rho.inverse())?;
        inverse.record(if back == g { 0.0 } else { 1.0 });

        let sigma = random_product(&shape, &mut rng);
        let moved = permute_game(&g, &rho)?;
        let pulled = permute_product(&sigma, &rho.inverse())?;
        let joint = sigma.outer(&shape)?;
        for p in 0..shape.num_players() {
            let lhs = expected_utility_product(&moved, p, &sigma)?;
            let rhs = expected_utility_product(&g, p, &pulled)?;
            compat.record((lhs - rhs).abs());
            let via_joint = expected_utility_joint(&g, p, &joint)?;
            outer.record((expected_utility_product(&g, p, &sigma)? - via_joint).abs());
        }

        let pi = random_joint(&shape, &mut rng);
        let mut before = pi.probs().to_vec();
        let mut after = permute_joint(&pi, &rho)?.into_probs();
        before.sort_by(f64::total_cmp);
        after.sort_by(f64::total_cmp);
        mass.record(if before == after { 0.0 } else { 1.0 });
    }
    Ok(vec![inverse, compat, outer, mass])
}

/// `E(ρu, ρs) = E(u, s)` for every concept.
pub fn check_permutation_lemmas(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 2);
    let mut out = vec![
        CheckResult::new("permutation_lemma_ne", EXACT_TOL),
        CheckResult::new("permutation_lemma_cce", EXACT_TOL),
        CheckResult::new("permutation_lemma_ce", EXACT_TOL),
    ];
    for _ in 0..cases {
        let shape = random_shape(&mut rng, 4);
        let g = random_game(&shape, &mut rng);
        let rho = random_game_permutation(&shape, &mut rng);
        let moved = permute_game(&g, &rho)?;
        let sigma = random_product(&shape, &mut rng);
        let a = approximation(&g, &Strategy::Product(sigma.clone()), SolutionConcept::Ne)?;
        let b = approximation(
            &moved,
            &Strategy::Product(permute_product(&sigma, &rho)?),
            SolutionConcept::Ne,
        )?;
        out[0].record((a - b).abs());
        let pi = random_joint(&shape, &mut rng);
        let moved_pi = Strategy::Joint(permute_joint(&pi, &rho)?);
        let pi = Strategy::Joint(pi);
        for (k, concept) in [(1, SolutionConcept::Cce), (2, SolutionConcept::Ce)] {
            let a = approximation(&g, &pi, concept)?;
            let b = approximation(&moved, &moved_pi, concept)?;
            out[k].record((a - b).abs());
        }
    }
    Ok(out)
}

/// `|E(s) − E(s')| ≤ L‖s − s'‖` with `L = 2n` (NE, max-over-players L1) or 2 (joint, L1).
pub fn check_lipschitz(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 3);
    let mut out = vec![
        CheckResult::new("lipschitz_ne", SLACK_TOL),
        CheckResult::new("lipschitz_cce", SLACK_TOL),
        CheckResult::new("lipschitz_ce", SLACK_TOL),
    ];
    for _ in 0..cases {
        let shape = random_shape(&mut rng, 4);
        let g = random_game(&shape, &mut rng);
        let n = shape.num_players() as f64;
        let s1 = random_product(&shape, &mut rng);
        // Half of the pairs are close, where the bound is tightest.
        let s2 = if rng.random_bool(0.5) {
            let t = rng.random::<f64>() * 0.05;
            let other = random_product(&shape, &mut rng);
            ProductStrategy::new(
                s1.players()
                    .iter()
                    .zip(other.players())
                    .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect())
                    .collect(),
            )?
        } else {
            random_product(&shape, &mut rng)
        };
        let e1 = approximation(&g, &Strategy::Product(s1.clone()), SolutionConcept::Ne)?;
        let e2 = approximation(&g, &Strategy::Product(s2.clone()), SolutionConcept::Ne)?;
        out[0].record((e1 - e2).abs() - 2.0 * n * s1.distance(&s2));

        let p1 = random_joint(&shape, &mut rng);
        let p2 = random_joint(&shape, &mut rng);
        let d = p1.distance(&p2);
        let (p1, p2) = (Strategy::Joint(p1), Strategy::Joint(p2));
        for (k, concept) in [(1, SolutionConcept::Cce), (2, SolutionConcept::Ce)] {
            let e1 = approximation(&g, &p1, concept)?;
            let e2 = approximation(&g, &p2, concept)?;
            out[k].record((e1 - e2).abs() - 2.0 * d);
        }
    }
    Ok(out)
}

/// Player `i`'s exploitability is affine in `σ_i` and convex in every `σ_j`.
pub fn check_linearity(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 4);
    let mut linear = CheckResult::new("exploitability_linear_in_own", EXACT_TOL);
    let mut convex = CheckResult::new("exploitability_convex_in_others", SLACK_TOL);
    for _ in 0..cases {
        let shape = random_shape(&mut rng, 4);
        let g = random_game(&shape, &mut rng);
        let base = random_product(&shape, &mut rng);
        let i = rng.random_range(0..shape.num_players());
        let j = rng.random_range(0..shape.num_players());
        let p: f64 = rng.random();
        let a = random_simplex(&mut rng, shape.actions(j));
        let b = random_simplex(&mut rng, shape.actions(j));
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| p * x + (1.0 - p) * y).collect();
        let e = |v: Vec<f64>| exploitability_ne(&g, &base.with_player(j, v)?, i);
        let (ea, eb, em) = (e(a)?, e(b)?, e(mix)?);
        let chord = p * ea + (1.0 - p) * eb;
        if i == j {
            linear.record((em - chord).abs());
        } else {
            convex.record(em - chord);
        }
    }
    Ok(vec![linear, convex])
}

/// The fast CE exploitability agrees with explicit enumeration of all modifications.
pub fn check_ce_enumeration(cases: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_for(seed, 5);
    let mut out = CheckResult::new("ce_matches_enumeration", EXACT_TOL);
    for _ in 0..cases {
        let shape = random_shape(&mut rng, 4);
        let g = random_game(&shape, &mut rng);
        let pi = random_joint(&shape, &mut rng);
        for p in 0..shape.num_players() {
            let fast = exploitability_ce(&g, &pi, p)?;
            let slow = exploitability_ce_enumerated(&g, &pi, p)?;
            out.record((fast - slow).abs());
        }
    }
    Ok(out)
}

/// Solver outputs certify under the metrics, pure equilibria move with the
/// game, and the best equilibrium welfare ignores relabelling.
pub fn check_solvers(cases: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 6);
    let mut pure = CheckResult::new("pure_ne_certified", EXACT_TOL);
    let mut covariant = CheckResult::new("pure_ne_covariant", 0.0);
    let mut support = CheckResult::new("support_enumeration_certified", SOLVER_TOL);
    let mut lp = CheckResult::new("welfare_lp_certified", SOLVER_TOL);
    let mut welfare = CheckResult::new("welfare_lp_permutation_invariant", SOLVER_TOL);
    for k in 0..cases {
        let shape = random_shape(&mut rng, 3);
        let g = random_game(&shape, &mut rng);
        let rho = random_game_permutation(&shape, &mut rng);
        let moved = permute_game(&g, &rho)?;
        let found = enumerate_pure_ne(&g)?;
        for idx in 0..shape.num_joint() {
            let joint = shape.decode(idx);
            let e = approximation(
                &g,
                &Strategy::Product(ProductStrategy::pure(&shape, &joint)),
                SolutionConcept::Ne,
            )?;
            // Pure profiles not returned must be certified as non-equilibria.
            pure.record(if found.contains(&joint) {
                e
            } else if e > 0.0 {
                0.0
            } else {
                1.0
            });
        }
        let mut mapped: Vec<Vec<usize>> = found
            .iter()
            .map(|a| (0..shape.num_players()).map(|p| rho.apply_action(p, a[p])).collect())
            .collect();
        let mut direct = enumerate_pure_ne(&moved)?;
        mapped.sort();
        direct.sort();
        covariant.record(if mapped == direct { 0.0 } else { 1.0 });

        if shape.num_players() == 2 {
            for s in support_enumeration_bimatrix(&g)?.equilibria {
                support.record(approximation(&g, &Strategy::Product(s), SolutionConcept::Ne)?);
            }
        }
        let concept = if k % 2 == 0 {
            SolutionConcept::Cce
        } else {
            SolutionConcept::Ce
        };
        let (pi, w) = max_welfare_equilibrium(&g, concept)?;
        lp.record(approximation(&g, &Strategy::Joint(pi), concept)?);
        let (_, w2) = max_welfare_equilibrium(&moved, concept)?;
        welfare.record((w - w2).abs());
    }
    Ok(vec![pure, covariant, support, lp, welfare])
}

fn model(shape: &GameShape, head: HeadKind, mode: EquivarianceMode, seed: u64) -> Result<ApproximatorModel> {
    ApproximatorModel::new(
        shape.clone(),
        &ModelConfig {
            hidden: vec![12, 12],
            head,
            mode,
            init: Init::Xavier { seed },
            ..ModelConfig::default()
        },
    )
}

const ORBIT_SHAPES: [&str; 4] = ["2x2", "3x2", "2x3", "2x2x2"];

/// Projected models are equivariant under every group element.
pub fn check_projected_equivariance(games_per_shape: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_for(seed, 7);
    let mut out = CheckResult::new("projected_equivariance", SLACK_TOL);
    for (s, text) in ORBIT_SHAPES.iter().enumerate() {
        let shape: GameShape = text.parse()?;
        let players: Vec<usize> = (0..shape.num_players()).collect();
        let group = enumerate_group(&shape, &players)?;
        let models = [
            model(&shape, HeadKind::Product, EquivarianceMode::Opi, seed + s as u64)?,
            model(&shape, HeadKind::Product, EquivarianceMode::Ppe, seed + s as u64)?,
            model(&shape, HeadKind::Product, EquivarianceMode::Both, seed + s as u64)?,
            model(&shape, HeadKind::Joint, EquivarianceMode::Pe, seed + s as u64)?,
        ];
        for _ in 0..games_per_shape {
            let g = random_game(&shape, &mut rng);
            for m in &models {
                for rho in &group {
                    out.record(check_equivariance(m, &g, rho, m.mode())?);
                }
            }
        }
    }
    Ok(out)
}

/// Product map that is both self-equivariant and opponent-invariant: each
/// player plays a softmax of their mean payoff per own action.
fn symmetric_product_map(g: &Game) -> Result<ProductStrategy> {
    let shape = g.shape();
    let per_player = (0..shape.num_players())
        .map(|i| {
            let m = shape.actions(i);
            let mut score = vec![0.0; m];
            for idx in 0..shape.num_joint() {
                score[shape.action_of(idx, i)] += g.payoffs(i)[idx];
            }
            let w: Vec<f64> = score
                .iter()
                .map(|s| (3.0 * s * m as f64 / shape.num_joint() as f64).exp())
                .collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect();
    ProductStrategy::new(per_player)
}

/// Permutation-equivariant joint map: softmax of the total payoff.
fn symmetric_joint_map(g: &Game) -> Result<JointStrategy> {
    let shape = g.shape();
    let w: Vec<f64> = (0..shape.num_joint())
        .map(|idx| (2.0 * (0..shape.num_players()).map(|p| g.payoffs(p)[idx]).sum::<f64>()).exp())
        .collect();
    let total: f64 = w.iter().sum();
    JointStrategy::new(shape.clone(), w.into_iter().map(|x| x / total).collect())
}

/// Projecting twice equals projecting once, and symmetric maps are fixed.
pub fn check_projection_algebra(games_per_shape: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = rng_for(seed, 8);
    let mut idem = CheckResult::new("projection_idempotent", EXACT_TOL);
    let mut fixed = CheckResult::new("projection_fixed_points", EXACT_TOL);
    for (s, text) in ORBIT_SHAPES.iter().enumerate() {
        let shape: GameShape = text.parse()?;
        let opi = model(&shape, HeadKind::Product, EquivarianceMode::Opi, seed + 10 + s as u64)?;
        let ppe = opi.with_mode(EquivarianceMode::Ppe)?;
        let both = opi.with_mode(EquivarianceMode::Both)?;
        let pe = model(&shape, HeadKind::Joint, EquivarianceMode::Pe, seed + 10 + s as u64)?;
        let f_opi = |g: &Game| opi.forward_product(g);
        let f_ppe = |g: &Game| ppe.forward_product(g);
        let f_both = |g: &Game| both.forward_product(g);
        let f_pe = |g: &Game| pe.forward_joint(g);
        for _ in 0..games_per_shape {
            let g = random_game(&shape, &mut rng);
            idem.record(product_gap(&project_o(&f_opi, &g)?, &opi.forward_product(&g)?));
            idem.record(product_gap(&project_p(&f_ppe, &g)?, &ppe.forward_product(&g)?));
            let twice = project_o(&|h: &Game| project_p(&f_both, h), &g)?;
            idem.record(product_gap(&twice, &both.forward_product(&g)?));
            idem.record(max_abs(project_q(&f_pe, &g)?.probs(), pe.forward_joint(&g)?.probs()));

            let direct = symmetric_product_map(&g)?;
            fixed.record(product_gap(&project_o(&symmetric_product_map, &g)?, &direct));
            fixed.record(product_gap(&project_p(&symmetric_product_map, &g)?, &direct));
            fixed.record(max_abs(
                project_q(&symmetric_joint_map, &g)?.probs(),
                symmetric_joint_map(&g)?.probs(),
            ));
        }
    }
    Ok(vec![idem, fixed])
}

fn constant_sum_games<R: Rng + ?Sized>(shape: &GameShape, count: usize, rng: &mut R) -> Result<Vec<Game>> {
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..shape.num_joint()).map(|_| rng.random()).collect();
            let v = u.iter().map(|x| 1.0 - x).collect();
            Game::new(shape.clone(), vec![u, v])
        })
        .collect()
}

/// Orbit averaging never raises the orbit-mean approximation; one result
/// per variant with one case per base game.
pub fn check_orbit_benefit(
    joint_2x2: usize,
    joint_3p: usize,
    product: usize,
    constant_sum: usize,
    seed: u64,
) -> Result<Vec<CheckResult>> {
    use OrbitBenefitVariant::*;
    let mut rng = rng_for(seed, 9);
    let mut sets = Vec::new();
    let shape22: GameShape = "2x2".parse()?;
    let shape222: GameShape = "2x2x2".parse()?;
    let mut joint: Vec<Game> = (0..joint_2x2).map(|_| random_game(&shape22, &mut rng)).collect();
    let joint3: Vec<Game> = (0..joint_3p).map(|_| random_game(&shape222, &mut rng)).collect();
    sets.push(("orbit_benefit_joint_cce_2x2", JointCce, std::mem::take(&mut joint)));
    sets.push(("orbit_benefit_joint_cce_2x2x2", JointCce, joint3));
    let s32: GameShape = "3x2".parse()?;
    let s23: GameShape = "2x3".parse()?;
    sets.push((
        "orbit_benefit_player_on_opi",
        PlayerOnOpi,
        (0..product).map(|_| random_game(&s32, &mut rng)).collect(),
    ));
    sets.push((
        "orbit_benefit_opponent_on_ppe",
        OpponentOnPpe,
        (0..product).map(|_| random_game(&s23, &mut rng)).collect(),
    ));
    sets.push((
        "orbit_benefit_constant_sum",
        ConstantSum,
        constant_sum_games(&shape22, constant_sum, &mut rng)?,
    ));
    let mut out = Vec::new();
    for (name, variant, games) in sets {
        let mut res = CheckResult::new(name, SLACK_TOL);
        let mut cfg = OrbitBenefitConfig::new(variant, seed);
        cfg.hidden = vec![12, 12];
        let report = exp_orbit_benefit(&games, &cfg)?;
        for row in &report.rows {
            let raw = row[1];
            for projected in &row[2..] {
                res.record(projected - raw);
            }
        }
        out.push(res);
    }
    Ok(out)
}

fn symmetrized<R: Rng + ?Sized>(shape: &GameShape, rho: &GamePermutation, rng: &mut R) -> Result<Game> {
    let g = random_game(shape, rng);
    let moved = permute_game(&g, rho)?;
    let payoffs = g
        .all_payoffs()
        .iter()
        .zip(moved.all_payoffs())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect())
        .collect();
    Game::new(shape.clone(), payoffs)
}

/// On games fixed by an involution `ρ`, symmetric models output strategies
/// fixed by `ρ`.
pub fn check_selection_barrier(random_games: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_for(seed, 10);
    let mut out = CheckResult::new("selection_barrier", SLACK_TOL);
    let mut cases: Vec<(Game, GamePermutation)> = vec![
        (
            named_game("identity2x2", &[])?,
            GamePermutation::from_maps(vec![vec![1, 0], vec![1, 0]])?,
        ),
        (
            named_game("swr3x3", &[0.1])?,
            GamePermutation::from_maps(vec![vec![1, 0, 2], vec![1, 0, 2]])?,
        ),
    ];
    for k in 0..random_games {
        let (text, maps) = if k % 2 == 0 {
            ("3x3", vec![vec![1, 0, 2], vec![1, 0, 2]])
        } else {
            ("2x2x2", vec![vec![1, 0], vec![1, 0], vec![1, 0]])
        };
        let shape: GameShape = text.parse()?;
        let rho = GamePermutation::from_maps(maps)?;
        cases.push((symmetrized(&shape, &rho, &mut rng)?, rho));
    }
    for (k, (g, rho)) in cases.iter().enumerate() {
        if permute_game(g, rho)? != *g {
            out.record(1.0);
            continue;
        }
        let shape = g.shape();
        let both = model(shape, HeadKind::Product, EquivarianceMode::Both, seed + k as u64)?.forward_product(g)?;
        out.record(product_gap(&both, &permute_product(&both, rho)?));
        let pe = model(shape, HeadKind::Joint, EquivarianceMode::Pe, seed + k as u64)?.forward_joint(g)?;
        out.record(max_abs(pe.probs(), permute_joint(&pe, rho)?.probs()));
    }
    Ok(out)
}

/// Softmax heads emit strictly positive vectors summing to one.
pub fn check_softmax_outputs(cases: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_for(seed, 11);
    let mut out = CheckResult::new("softmax_outputs_valid", SLACK_TOL);
    for k in 0..cases {
        let shape = random_shape(&mut rng, 3);
        let (head, mode) = match k % 5 {
            0 => (HeadKind::Product, EquivarianceMode::General),
            1 => (HeadKind::Product, EquivarianceMode::Opi),
            2 => (HeadKind::Product, EquivarianceMode::Both),
            3 => (HeadKind::Joint, EquivarianceMode::General),
            _ => (HeadKind::Joint, EquivarianceMode::Pe),
        };
        let m = model(&shape, head, mode, seed + k as u64)?;
        let g = random_game(&shape, &mut rng);
        let blocks: Vec<Vec<f64>> = match m.forward(&g)? {
            Strategy::Product(s) => s.into_inner(),
            Strategy::Joint(j) => vec![j.into_probs()],
        };
        for b in blocks {
            let positive = b.iter().all(|&x| x > 0.0);
            let sum: f64 = b.iter().sum();
            out.record(if positive { (sum - 1.0).abs() } else { 1.0 });
        }
    }
    Ok(out)
}

/// Relative error between the analytic gradient and central finite
/// differences, or `None` when the point is too close to a kink.
pub fn gradient_check(model: &ApproximatorModel, game: &Game, concept: SolutionConcept) -> Result<Option<f64>> {
    let margin = model.argmax_margin(game, concept)?;
    if margin <= MIN_MARGIN {
        return Ok(None);
    }
    // Small enough that no parameter nudge moves an argmax.
    let h = (margin / 50.0).clamp(1e-9, 1e-5);
    let (_, grad) = model.loss_and_gradient(game, concept)?;
    let mut probe = model.clone();
    let mut fd = Vec::with_capacity(grad.len());
    for k in 0..grad.len() {
        let orig = probe.params().as_slice()[k];
        probe.params_mut().as_mut_slice()[k] = orig + h;
        let up = probe.loss_and_gradient(game, concept)?.0;
        probe.params_mut().as_mut_slice()[k] = orig - h;
        let down = probe.loss_and_gradient(game, concept)?.0;
        probe.params_mut().as_mut_slice()[k] = orig;
        fd.push((up - down) / (2.0 * h));
    }
    let diff = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = norm(&grad).max(norm(&fd));
    Ok(Some(if scale == 0.0 { diff } else { diff / scale }))
}

/// Finite-difference checks on `points` random (game, parameters) pairs with
/// a clear argmax, cycling through every head and mode.
pub fn check_gradients(points: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = rng_for(seed, 12);
    let mut out = CheckResult::new("gradient_finite_difference", GRADIENT_TOL);
    let configs = [
        ("2x2", HeadKind::Product, EquivarianceMode::General, SolutionConcept::Ne),
        ("3x2", HeadKind::Product, EquivarianceMode::Opi, SolutionConcept::Ne),
        ("2x3", HeadKind::Product, EquivarianceMode::Ppe, SolutionConcept::Ne),
        ("2x2", HeadKind::Product, EquivarianceMode::Both, SolutionConcept::Ne),
        (
            "2x2x2",
            HeadKind::Product,
            EquivarianceMode::General,
            SolutionConcept::Ne,
        ),
        ("2x2", HeadKind::Joint, EquivarianceMode::General, SolutionConcept::Cce),
        ("2x3", HeadKind::Joint, EquivarianceMode::Pe, SolutionConcept::Cce),
    ];
    let mut attempts = 0;
    while out.cases < points && attempts < 20 * points {
        let (text, head, mode, concept) = configs[attempts % configs.len()];
        attempts += 1;
        let shape: GameShape = text.parse()?;
        let m = ApproximatorModel::new(
            shape.clone(),
            &ModelConfig {
                hidden: vec![6],
                head,
                mode,
                init: Init::Xavier { seed: rng.random() },
                ..ModelConfig::default()
            },
        )?;
        let g = random_game(&shape, &mut rng);
        if let Some(err) = gradient_check(&m, &g, concept)? {
            out.record(err);
        }
    }
    Ok(out)
}

/// Runs every check. `Quick` uses small case counts and finishes in
/// seconds; `Full` uses the counts the acceptance suite asks for.
pub fn run_suite(level: Level, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    checks.extend(check_game_algebra(level.pick(100, 1000), seed)?);
    checks.extend(check_permutation_lemmas(level.pick(100, 1000), seed)?);
    checks.extend(check_lipschitz(level.pick(100, 1000), seed)?);
    checks.extend(check_linearity(level.pick(200, 1000), seed)?);
    checks.push(check_ce_enumeration(level.pick(30, 200), seed)?);
    checks.extend(check_solvers(level.pick(20, 200), seed)?);
    checks.push(check_projected_equivariance(level.pick(5, 100), seed)?);
    checks.extend(check_projection_algebra(level.pick(5, 50), seed)?);
    checks.extend(check_orbit_benefit(
        level.pick(20, 200),
        level.pick(5, 50),
        level.pick(10, 100),
        level.pick(10, 100),
        seed,
    )?);
    checks.push(check_selection_barrier(level.pick(4, 40), seed)?);
    checks.push(check_softmax_outputs(level.pick(20, 200), seed)?);
    checks.push(check_gradients(level.pick(10, 100), seed)?);
    Ok(VerifyReport { level, seed, checks })
}
