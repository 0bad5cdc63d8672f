//! Exploitability, equilibrium approximation, NashConv and social welfare.
//!
//! Every argmax breaks ties toward the lowest index (player, then action) so
//! that subgradients used in training are deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    contract_except, dot, expected_utility_joint, expected_utility_product, Game, JointStrategy, ProductStrategy,
    Strategy,
};

/// Slack allowed below zero for quantities that are non-negative in exact arithmetic.
pub const NONNEG_SLACK: f64 = 1e-12;

/// Largest `m^m` for which CE modifications are enumerated explicitly.
pub const CE_ENUM_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionConcept {
    #[serde(alias = "NE")]
    Ne,
    #[serde(alias = "CE")]
    Ce,
    #[serde(alias = "CCE")]
    Cce,
}

impl std::fmt::Display for SolutionConcept {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolutionConcept::Ne => "ne",
            SolutionConcept::Ce => "ce",
            SolutionConcept::Cce => "cce",
        })
    }
}

impl std::str::FromStr for SolutionConcept {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ne" => Ok(SolutionConcept::Ne),
            "ce" => Ok(SolutionConcept::Ce),
            "cce" => Ok(SolutionConcept::Cce),
            _ => Err(Error::Unknown {
                kind: "solution concept",
                name: s.to_string(),
            }),
        }
    }
}

/// A map `φ_i: A_i -> A_i`, not necessarily a bijection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrategyModification {
    player: usize,
    map: Vec<usize>,
}

impl StrategyModification {
    pub fn new(player: usize, map: Vec<usize>) -> Result<Self> {
        if let Some(v) = map.iter().find(|&&v| v >= map.len()) {
            return Err(Error::invalid(format!("modification target {v} out of range")));
        }
        Ok(StrategyModification { player, map })
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }
}

/// Opponent profile a best response is computed against.
#[derive(Clone, Copy, Debug)]
pub enum Opponents<'a> {
    /// Others play independently according to this product strategy
    /// (the deviating player's own entry is ignored).
    Product(&'a ProductStrategy),
    /// Others play the `-i` marginal of this joint strategy.
    Joint(&'a JointStrategy),
}

/// Index and value of the first maximum.
pub(crate) fn argmax(v: &[f64]) -> (usize, f64) {
    let mut best = (0, v[0]);
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > best.1 {
            best = (i, x);
        }
    }
    best
}

/// Gap between the maximum and the runner-up (infinite for a single entry).
pub(crate) fn top_margin(v: &[f64]) -> f64 {
    let (i, best) = argmax(v);
    v.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &x)| best - x)
        .fold(f64::INFINITY, f64::min)
}

/// `u_i(a'_i, σ_{-i})` for every pure deviation `a'_i`.
pub(crate) fn deviation_values_product(game: &Game, player: usize, sigma: &ProductStrategy) -> Vec<f64> {
    let strategies: Vec<&[f64]> = sigma.players().iter().map(Vec::as_slice).collect();
    contract_except(game.shape(), game.payoffs(player), &strategies, player)
}

/// `Σ_a π(a) u_i(a'_i, a_{-i})` for every pure deviation `a'_i`.
pub(crate) fn deviation_values_joint(game: &Game, player: usize, pi: &JointStrategy) -> Vec<f64> {
    let shape = game.shape();
    let u = game.payoffs(player);
    let m = shape.actions(player);
    let mut out = vec![0.0; m];
    for (idx, &p) in pi.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (b, o) in out.iter_mut().enumerate() {
            *o += p * u[shape.with_action(idx, player, b)];
        }
    }
    out
}

/// Table `T[r][b] = Σ_{a: a_i = r} π(a) u_i(b, a_{-i})`.
pub(crate) fn recommendation_table(game: &Game, player: usize, pi: &JointStrategy) -> Vec<Vec<f64>> {
    let shape = game.shape();
    let u = game.payoffs(player);
    let m = shape.actions(player);
    let mut table = vec![vec![0.0; m]; m];
    for (idx, &p) in pi.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let r = shape.action_of(idx, player);
        for b in 0..m {
            table[r][b] += p * u[shape.with_action(idx, player, b)];
        }
    }
    table
}

fn check_product(game: &Game, sigma: &ProductStrategy, player: usize) -> Result<()> {
    sigma.check_shape(game.shape())?;
    game.shape().check_player(player)
}

fn check_joint(game: &Game, pi: &JointStrategy, player: usize) -> Result<()> {
    game.shape().check_same(pi.shape(), "joint strategy")?;
    game.shape().check_player(player)
}

/// `max_{a'_i} u_i(a'_i, ·)` against the given opponent profile.
pub fn best_response_value(game: &Game, player: usize, others: Opponents<'_>) -> Result<f64> {
    let values = match others {
        Opponents::Product(s) => {
            check_product(game, s, player)?;
            deviation_values_product(game, player, s)
        }
        Opponents::Joint(pi) => {
            check_joint(game, pi, player)?;
            deviation_values_joint(game, player, pi)
        }
    };
    Ok(argmax(&values).1)
}

/// `E_i(σ, u) = max_{a'_i} u_i(a'_i, σ_{-i}) - u_i(σ)`; never below `-1e-12`.
pub fn exploitability_ne(game: &Game, sigma: &ProductStrategy, player: usize) -> Result<f64> {
    check_product(game, sigma, player)?;
    let values = deviation_values_product(game, player, sigma);
    let gain = argmax(&values).1 - dot(&values, sigma.player(player));
    debug_assert!(gain >= -NONNEG_SLACK, "negative NE exploitability {gain}");
    Ok(gain)
}

/// `E_i(π, u) = max_{a'_i} u_i(a'_i, π_{-i}) - u_i(π)`.
///
/// The sign is kept: correlation can pay more than every independent
/// deviation, giving a negative value.
pub fn exploitability_cce(game: &Game, pi: &JointStrategy, player: usize) -> Result<f64> {
    check_joint(game, pi, player)?;
    let values = deviation_values_joint(game, player, pi);
    Ok(argmax(&values).1 - expected_utility_joint(game, player, pi)?)
}

/// `E^CE_i(π, u)`, the best gain over all strategy modifications.
///
/// The maximizing modification picks, for every recommendation `r`
/// independently, the best replacement action, so the cost is linear in
/// `|A| m_i` rather than exponential.
pub fn exploitability_ce(game: &Game, pi: &JointStrategy, player: usize) -> Result<f64> {
    check_joint(game, pi, player)?;
    let table = recommendation_table(game, player, pi);
    let best: f64 = table.iter().map(|row| argmax(row).1).sum();
    Ok(best - expected_utility_joint(game, player, pi)?)
}

/// `E^CE_i` by enumerating all `m_i^{m_i}` modifications explicitly.
pub fn exploitability_ce_enumerated(game: &Game, pi: &JointStrategy, player: usize) -> Result<f64> {
    check_joint(game, pi, player)?;
    let m = game.shape().actions(player);
    let count = (0..m).try_fold(1usize, |acc, _| acc.checked_mul(m));
    let count = match count {
        Some(c) if c <= CE_ENUM_LIMIT => c,
        _ => {
            return Err(Error::capacity(format!(
                "{m}^{m} strategy modifications exceed {CE_ENUM_LIMIT}"
            )))
        }
    };
    let mut best = f64::NEG_INFINITY;
    for code in 0..count {
        let mut map = vec![0usize; m];
        let mut c = code;
        for slot in map.iter_mut() {
            *slot = c % m;
            c /= m;
        }
        let phi = StrategyModification::new(player, map)?;
        best = best.max(modified_utility(game, pi, &phi));
    }
    Ok(best - expected_utility_joint(game, player, pi)?)
}

/// `Σ_a π(a) u_i(φ_i(a_i), a_{-i})`.
pub fn modified_utility(game: &Game, pi: &JointStrategy, phi: &StrategyModification) -> f64 {
    let shape = game.shape();
    let i = phi.player();
    let u = game.payoffs(i);
    pi.probs()
        .iter()
        .enumerate()
        .map(|(idx, &p)| p * u[shape.with_action(idx, i, phi.map()[shape.action_of(idx, i)])])
        .sum()
}

fn concept_error(concept: SolutionConcept, got: &str) -> Error {
    let want = match concept {
        SolutionConcept::Ne => "a product strategy",
        SolutionConcept::Ce | SolutionConcept::Cce => "a joint strategy",
    };
    Error::Concept(format!("{concept} needs {want}, got a {got} strategy"))
}

/// Per-player exploitabilities for the concept, in player order.
pub fn exploitabilities(game: &Game, strategy: &Strategy, concept: SolutionConcept) -> Result<Vec<f64>> {
    let n = game.num_players();
    match (concept, strategy) {
        (SolutionConcept::Ne, Strategy::Product(s)) => (0..n).map(|i| exploitability_ne(game, s, i)).collect(),
        (SolutionConcept::Cce, Strategy::Joint(pi)) => (0..n).map(|i| exploitability_cce(game, pi, i)).collect(),
        (SolutionConcept::Ce, Strategy::Joint(pi)) => (0..n).map(|i| exploitability_ce(game, pi, i)).collect(),
        (c, Strategy::Product(_)) => Err(concept_error(c, "product")),
        (c, Strategy::Joint(_)) => Err(concept_error(c, "joint")),
    }
}

/// Maximum exploitability over players; `strategy` is an ε-solution iff this is `<= ε`.
pub fn approximation(game: &Game, strategy: &Strategy, concept: SolutionConcept) -> Result<f64> {
    Ok(exploitabilities(game, strategy, concept)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Sum over players of `max(E_i, 0)`.
///
/// Per-player terms are clamped so exact CCEs with strictly negative slack
/// report zero.
pub fn nashconv(game: &Game, strategy: &Strategy, concept: SolutionConcept) -> Result<f64> {
    Ok(exploitabilities(game, strategy, concept)?
        .into_iter()
        .map(|e| e.max(0.0))
        .sum())
}

/// Sum of raw (unclamped) exploitabilities.
pub fn exploitability_sum(game: &Game, strategy: &Strategy, concept: SolutionConcept) -> Result<f64> {
    Ok(exploitabilities(game, strategy, concept)?.into_iter().sum())
}

/// `SW = Σ_i u_i(·)`.
pub fn social_welfare(game: &Game, strategy: &Strategy) -> Result<f64> {
    let n = game.num_players();
    match strategy {
        Strategy::Product(s) => (0..n).map(|i| expected_utility_product(game, i, s)).sum(),
        Strategy::Joint(pi) => (0..n).map(|i| expected_utility_joint(game, i, pi)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::named_game;
    use crate::game::GameShape;

    fn identity2x2() -> Game {
        named_game("identity2x2", &[]).unwrap()
    }

    fn product(v: Vec<Vec<f64>>) -> ProductStrategy {
        ProductStrategy::new(v).unwrap()
    }

    #[test]
    fn best_response_examples() {
        let g = identity2x2();
        let s = ProductStrategy::uniform(g.shape());
        assert_eq!(best_response_value(&g, 0, Opponents::Product(&s)).unwrap(), 0.5);
        let pm = JointStrategy::pure(g.shape(), &[0, 0]);
        assert_eq!(best_response_value(&g, 0, Opponents::Joint(&pm)).unwrap(), 1.0);

        let eps = 0.05;
        let swr = named_game("swr3x3", &[eps]).unwrap();
        let col3 = product(vec![vec![1.0 / 3.0; 3], vec![0.0, 0.0, 1.0]]);
        let v = best_response_value(&swr, 0, Opponents::Product(&col3)).unwrap();
        assert!((v - eps).abs() < 1e-15);
        let left = product(vec![vec![1.0 / 3.0; 3], vec![0.5, 0.5, 0.0]]);
        let v = best_response_value(&swr, 0, Opponents::Product(&left)).unwrap();
        assert!((v - (0.5 + eps)).abs() < 1e-15);
    }

    #[test]
    fn ne_exploitability_examples() {
        let g = identity2x2();
        let pure = ProductStrategy::pure(g.shape(), &[0, 0]);
        let mixed = ProductStrategy::uniform(g.shape());
        let off = product(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        for i in 0..2 {
            assert_eq!(exploitability_ne(&g, &pure, i).unwrap(), 0.0);
            assert_eq!(exploitability_ne(&g, &mixed, i).unwrap(), 0.0);
        }
        assert_eq!(exploitability_ne(&g, &off, 0).unwrap(), 1.0);
        assert!(exploitability_ne(&g, &off, 2).is_err());
    }

    #[test]
    fn cce_exploitability_keeps_sign() {
        let g = identity2x2();
        let s = g.shape();
        assert_eq!(
            exploitability_cce(&g, &JointStrategy::pure(s, &[0, 0]), 0).unwrap(),
            0.0
        );
        let diag = JointStrategy::uniform_over(s, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(exploitability_cce(&g, &diag, 0).unwrap(), -0.5);
        assert_eq!(exploitability_cce(&g, &JointStrategy::uniform(s), 1).unwrap(), 0.0);
    }

    #[test]
    fn ce_exploitability_examples() {
        let g = identity2x2();
        let s = g.shape();
        let pm = JointStrategy::pure(s, &[0, 0]);
        let anti = JointStrategy::uniform_over(s, &[vec![0, 1], vec![1, 0]]).unwrap();
        let diag = JointStrategy::uniform_over(s, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(exploitability_ce(&g, &pm, 0).unwrap(), 0.0);
        assert_eq!(exploitability_ce(&g, &anti, 0).unwrap(), 1.0);
        assert_eq!(exploitability_ce(&g, &diag, 0).unwrap(), 0.0);
        assert_eq!(exploitability_ce_enumerated(&g, &anti, 0).unwrap(), 1.0);
        assert_eq!(exploitability_ce_enumerated(&g, &pm, 1).unwrap(), 0.0);
    }

    #[test]
    fn ce_enumeration_has_a_capacity_limit() {
        let shape = GameShape::new(vec![9, 2]).unwrap();
        let g = Game::from_fn(shape.clone(), |_, _| 0.5).unwrap();
        let pi = JointStrategy::uniform(&shape);
        assert!(matches!(
            exploitability_ce_enumerated(&g, &pi, 0),
            Err(Error::Capacity(_))
        ));
        assert!(exploitability_ce_enumerated(&g, &pi, 1).is_ok());
    }

    #[test]
    fn approximation_examples_and_concept_checks() {
        let g = identity2x2();
        let s = g.shape();
        let mixed = Strategy::Product(ProductStrategy::uniform(s));
        let off = Strategy::Product(product(vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        let uni = Strategy::Joint(JointStrategy::uniform(s));
        assert_eq!(approximation(&g, &mixed, SolutionConcept::Ne).unwrap(), 0.0);
        assert_eq!(approximation(&g, &off, SolutionConcept::Ne).unwrap(), 1.0);
        assert_eq!(approximation(&g, &uni, SolutionConcept::Cce).unwrap(), 0.0);
        assert!(matches!(
            approximation(&g, &uni, SolutionConcept::Ne),
            Err(Error::Concept(_))
        ));
        assert!(matches!(
            approximation(&g, &mixed, SolutionConcept::Ce),
            Err(Error::Concept(_))
        ));
    }

    #[test]
    fn nashconv_examples() {
        let g = identity2x2();
        let s = g.shape();
        let ne = Strategy::Product(ProductStrategy::pure(s, &[1, 1]));
        assert_eq!(nashconv(&g, &ne, SolutionConcept::Ne).unwrap(), 0.0);
        let off = Strategy::Product(product(vec![vec![1.0, 0.0], vec![0.0, 1.0]]));
        assert_eq!(nashconv(&g, &off, SolutionConcept::Ne).unwrap(), 2.0);
        let half = Strategy::Product(product(vec![vec![1.0, 0.0], vec![0.5, 0.5]]));
        assert_eq!(nashconv(&g, &half, SolutionConcept::Ne).unwrap(), 0.5);
        // Negative CCE slack is clamped.
        let diag = Strategy::Joint(JointStrategy::uniform_over(s, &[vec![0, 0], vec![1, 1]]).unwrap());
        assert_eq!(nashconv(&g, &diag, SolutionConcept::Cce).unwrap(), 0.0);
        assert_eq!(exploitability_sum(&g, &diag, SolutionConcept::Cce).unwrap(), -1.0);
    }

    #[test]
    fn social_welfare_examples() {
        let eps = 0.05;
        let swr = named_game("swr3x3", &[eps]).unwrap();
        let s = swr.shape();
        let top = Strategy::Joint(JointStrategy::pure(s, &[0, 0]));
        let bottom = Strategy::Product(ProductStrategy::pure(s, &[2, 2]));
        assert_eq!(social_welfare(&swr, &top).unwrap(), 2.0);
        assert!((social_welfare(&swr, &bottom).unwrap() - 2.0 * eps).abs() < 1e-15);
        let g = identity2x2();
        let uni = Strategy::Joint(JointStrategy::uniform(g.shape()));
        assert_eq!(social_welfare(&g, &uni).unwrap(), 1.0);
    }

    #[test]
    fn modification_validation() {
        assert!(StrategyModification::new(0, vec![0, 2]).is_err());
        assert!(StrategyModification::new(0, vec![1, 1]).is_ok());
    }

    #[test]
    fn margin_helpers() {
        assert_eq!(argmax(&[0.1, 0.3, 0.3]), (1, 0.3));
        assert!((top_margin(&[0.1, 0.4, 0.3]) - 0.1).abs() < 1e-15);
        assert_eq!(top_margin(&[0.2]), f64::INFINITY);
    }
}
