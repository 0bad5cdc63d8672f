//! Normal-form games, product and joint strategies, and expected utility.
//!
//! Joint actions are indexed 0-based in row-major order with player 0 on the
//! slowest axis, so a payoff tensor for shape `(m_0, ..., m_{n-1})` is a flat
//! slice of length `m_0 * ... * m_{n-1}`.

mod perm;

pub use perm::{
    enumerate_group, enumerate_permutations, group_order, permute_game, permute_joint, permute_product,
    random_game_permutation, random_permutation, GamePermutation, PlayerPermutation, ORBIT_ENUM_LIMIT,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on simplex sums at construction time.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(into = "Vec<usize>", try_from = "ShapeRepr")]
pub struct GameShape {
    action_counts: Vec<usize>,
    strides: Vec<usize>,
    num_joint: usize,
}

impl GameShape {
    pub fn new(action_counts: Vec<usize>) -> Result<Self> {
        if action_counts.len() < 2 {
            return Err(Error::invalid(format!(
                "a game needs at least 2 players, got {}",
                action_counts.len()
            )));
        }
        if let Some(p) = action_counts.iter().position(|&m| m == 0) {
            return Err(Error::invalid(format!("player {p} has no actions")));
        }
        let mut strides = vec![1usize; action_counts.len()];
        let mut num_joint = 1usize;
        for i in (0..action_counts.len()).rev() {
            strides[i] = num_joint;
            num_joint = num_joint
                .checked_mul(action_counts[i])
                .ok_or_else(|| Error::capacity(format!("joint action space of {action_counts:?} overflows")))?;
        }
        Ok(GameShape {
            action_counts,
            strides,
            num_joint,
        })
    }

    pub fn num_players(&self) -> usize {
        self.action_counts.len()
    }

    pub fn actions(&self, player: usize) -> usize {
        self.action_counts[player]
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Number of joint actions, `|A|`.
    pub fn num_joint(&self) -> usize {
        self.num_joint
    }

    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn index(&self, joint: &[usize]) -> usize {
        debug_assert_eq!(joint.len(), self.num_players());
        joint.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    /// Action of `player` in the joint action with flat index `idx`.
    #[inline]
    pub fn action_of(&self, idx: usize, player: usize) -> usize {
        (idx / self.strides[player]) % self.action_counts[player]
    }

    pub fn decode(&self, idx: usize) -> Vec<usize> {
        (0..self.num_players()).map(|p| self.action_of(idx, p)).collect()
    }

    /// Flat index of `idx` with `player`'s action replaced by `action`.
    #[inline]
    pub fn with_action(&self, idx: usize, player: usize, action: usize) -> usize {
        let current = self.action_of(idx, player);
        idx - current * self.strides[player] + action * self.strides[player]
    }

    pub(crate) fn check_same(&self, other: &GameShape, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::dim(format!("{what}: expected shape {self}, got {other}")));
        }
        Ok(())
    }

    pub(crate) fn check_player(&self, player: usize) -> Result<()> {
        if player >= self.num_players() {
            return Err(Error::dim(format!(
                "player {player} out of range for {} players",
                self.num_players()
            )));
        }
        Ok(())
    }
}

impl From<GameShape> for Vec<usize> {
    fn from(shape: GameShape) -> Self {
        shape.action_counts
    }
}

/// Accepted on input: `[2, 3]` or `"2x3"`.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum ShapeRepr {
    Counts(Vec<usize>),
    Text(String),
}

impl TryFrom<ShapeRepr> for GameShape {
    type Error = Error;

    fn try_from(repr: ShapeRepr) -> Result<Self> {
        match repr {
            ShapeRepr::Counts(counts) => GameShape::new(counts),
            ShapeRepr::Text(text) => text.parse(),
        }
    }
}

impl fmt::Display for GameShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.action_counts.iter().map(|m| m.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

impl FromStr for GameShape {
    type Err = Error;

    /// Parses `"2x2"`, `"3x3x3"` and similar.
    fn from_str(s: &str) -> Result<Self> {
        let counts = s
            .split(['x', 'X'])
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad shape component {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        GameShape::new(counts)
    }
}

/// An n-player normal-form game with payoffs in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    shape: GameShape,
    payoffs: Vec<Vec<f64>>,
}

impl Game {
    /// Builds a game, rejecting any payoff outside `[0, 1]`.
    pub fn new(shape: GameShape, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_layout(&shape, &payoffs)?;
        for (p, tensor) in payoffs.iter().enumerate() {
            for (idx, &v) in tensor.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!(
                        "payoff of player {p} at joint action {:?} is {v}, outside [0, 1]",
                        shape.decode(idx)
                    )));
                }
            }
        }
        Ok(Game { shape, payoffs })
    }

    /// Builds a game after mapping all payoffs affinely onto `[0, 1]`.
    ///
    /// One map is shared by every player, so equilibria and welfare
    /// comparisons are preserved. A constant game maps to all zeros.
    pub fn normalized(shape: GameShape, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        Self::check_layout(&shape, &payoffs)?;
        let (lo, hi) = payoffs
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let payoffs = payoffs
            .into_iter()
            .map(|t| {
                t.into_iter()
                    .map(|v| {
                        if span > 0.0 {
                            ((v - lo) / span).clamp(0.0, 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Game { shape, payoffs })
    }

    /// Builds a game from a payoff function `f(player, joint_action)`.
    pub fn from_fn(shape: GameShape, mut f: impl FnMut(usize, &[usize]) -> f64) -> Result<Self> {
        let mut payoffs = vec![vec![0.0; shape.num_joint()]; shape.num_players()];
        for idx in 0..shape.num_joint() {
            let joint = shape.decode(idx);
            for (p, tensor) in payoffs.iter_mut().enumerate() {
                tensor[idx] = f(p, &joint);
            }
        }
        Game::new(shape, payoffs)
    }

    /// Two-player game from row-major matrices `a[r][c]`, `b[r][c]`.
    pub fn bimatrix(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Self> {
        let rows = a.len();
        let cols = a.first().map_or(0, Vec::len);
        if b.len() != rows || a.iter().chain(b).any(|r| r.len() != cols) {
            return Err(Error::dim("bimatrix payoffs must be equal-size rectangles"));
        }
        let shape = GameShape::new(vec![rows, cols])?;
        Game::new(shape, vec![a.concat(), b.concat()])
    }

    fn check_layout(shape: &GameShape, payoffs: &[Vec<f64>]) -> Result<()> {
        if payoffs.len() != shape.num_players() {
            return Err(Error::dim(format!(
                "expected {} payoff tensors, got {}",
                shape.num_players(),
                payoffs.len()
            )));
        }
        for (p, t) in payoffs.iter().enumerate() {
            if t.len() != shape.num_joint() {
                return Err(Error::dim(format!(
                    "payoff tensor of player {p} has {} entries, expected {}",
                    t.len(),
                    shape.num_joint()
                )));
            }
            if let Some(v) = t.iter().find(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("payoff of player {p} is {v}")));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn num_players(&self) -> usize {
        self.shape.num_players()
    }

    pub fn payoffs(&self, player: usize) -> &[f64] {
        &self.payoffs[player]
    }

    pub fn all_payoffs(&self) -> &[Vec<f64>] {
        &self.payoffs
    }

    pub fn payoff(&self, player: usize, joint: &[usize]) -> f64 {
        self.payoffs[player][self.shape.index(joint)]
    }

    /// All payoff tensors concatenated player by player.
    pub fn flattened(&self) -> Vec<f64> {
        self.payoffs.concat()
    }

    pub(crate) fn from_parts_unchecked(shape: GameShape, payoffs: Vec<Vec<f64>>) -> Self {
        Game { shape, payoffs }
    }
}

fn clean_simplex(v: Vec<f64>, what: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{what}: empty distribution")));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x < -SIMPLEX_TOL) {
        return Err(Error::invalid(format!("{what}: entry {x} is not a probability")));
    }
    let v: Vec<f64> = v.into_iter().map(|x| x.max(0.0)).collect();
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::invalid(format!("{what}: sums to {sum}, not 1")));
    }
    Ok(v.into_iter().map(|x| x / sum).collect())
}

/// Independent mixed strategies, one simplex vector per player.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductStrategy {
    per_player: Vec<Vec<f64>>,
}

impl ProductStrategy {
    pub fn new(per_player: Vec<Vec<f64>>) -> Result<Self> {
        let per_player = per_player
            .into_iter()
            .enumerate()
            .map(|(p, v)| clean_simplex(v, &format!("strategy of player {p}")))
            .collect::<Result<Vec<_>>>()?;
        Ok(ProductStrategy { per_player })
    }

    pub fn uniform(shape: &GameShape) -> Self {
        let per_player = shape.action_counts().iter().map(|&m| vec![1.0 / m as f64; m]).collect();
        ProductStrategy { per_player }
    }

    pub fn pure(shape: &GameShape, joint: &[usize]) -> Self {
        let per_player = shape
            .action_counts()
            .iter()
            .zip(joint)
            .map(|(&m, &a)| {
                let mut v = vec![0.0; m];
                v[a] = 1.0;
                v
            })
            .collect();
        ProductStrategy { per_player }
    }

    pub(crate) fn from_raw(per_player: Vec<Vec<f64>>) -> Self {
        ProductStrategy { per_player }
    }

    pub fn num_players(&self) -> usize {
        self.per_player.len()
    }

    pub fn player(&self, p: usize) -> &[f64] {
        &self.per_player[p]
    }

    pub fn players(&self) -> &[Vec<f64>] {
        &self.per_player
    }

    pub fn into_inner(self) -> Vec<Vec<f64>> {
        self.per_player
    }

    /// Returns a copy with player `p`'s vector replaced.
    pub fn with_player(&self, p: usize, v: Vec<f64>) -> Result<Self> {
        let mut per_player = self.per_player.clone();
        per_player[p] = clean_simplex(v, &format!("strategy of player {p}"))?;
        Ok(ProductStrategy { per_player })
    }

    pub(crate) fn check_shape(&self, shape: &GameShape) -> Result<()> {
        let lens: Vec<usize> = self.per_player.iter().map(Vec::len).collect();
        if lens != shape.action_counts() {
            return Err(Error::dim(format!(
                "product strategy has sizes {lens:?}, game has {:?}",
                shape.action_counts()
            )));
        }
        Ok(())
    }

    /// The joint distribution `π(a) = Π_i σ_i(a_i)`.
    pub fn outer(&self, shape: &GameShape) -> Result<JointStrategy> {
        self.check_shape(shape)?;
        let probs = (0..shape.num_joint())
            .map(|idx| {
                self.per_player
                    .iter()
                    .enumerate()
                    .map(|(p, v)| v[shape.action_of(idx, p)])
                    .product()
            })
            .collect();
        Ok(JointStrategy {
            shape: shape.clone(),
            probs,
        })
    }

    /// Max over players of the L1 distance between their vectors.
    pub fn distance(&self, other: &ProductStrategy) -> f64 {
        self.per_player
            .iter()
            .zip(&other.per_player)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A (possibly correlated) distribution over joint actions.
#[derive(Clone, Debug, PartialEq)]
pub struct JointStrategy {
    shape: GameShape,
    probs: Vec<f64>,
}

impl JointStrategy {
    pub fn new(shape: GameShape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.num_joint() {
            return Err(Error::dim(format!(
                "joint strategy has {} entries, shape {shape} needs {}",
                probs.len(),
                shape.num_joint()
            )));
        }
        let probs = clean_simplex(probs, "joint strategy")?;
        Ok(JointStrategy { shape, probs })
    }

    pub fn uniform(shape: &GameShape) -> Self {
        let n = shape.num_joint();
        JointStrategy {
            shape: shape.clone(),
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn pure(shape: &GameShape, joint: &[usize]) -> Self {
        let mut probs = vec![0.0; shape.num_joint()];
        probs[shape.index(joint)] = 1.0;
        JointStrategy {
            shape: shape.clone(),
            probs,
        }
    }

    /// Uniform distribution over the listed joint actions.
    pub fn uniform_over(shape: &GameShape, support: &[Vec<usize>]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::invalid("empty support"));
        }
        let mut probs = vec![0.0; shape.num_joint()];
        for joint in support {
            probs[shape.index(joint)] += 1.0 / support.len() as f64;
        }
        JointStrategy::new(shape.clone(), probs)
    }

    pub(crate) fn from_raw(shape: GameShape, probs: Vec<f64>) -> Self {
        JointStrategy { shape, probs }
    }

    pub fn shape(&self) -> &GameShape {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, joint: &[usize]) -> f64 {
        self.probs[self.shape.index(joint)]
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }

    /// L1 distance between two joint strategies.
    pub fn distance(&self, other: &JointStrategy) -> f64 {
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum()
    }
}

/// Output of an approximator or a solver: either product or joint form.
#[derive(Clone, Debug, PartialEq)]
pub enum Strategy {
    Product(ProductStrategy),
    Joint(JointStrategy),
}

impl Strategy {
    pub fn as_product(&self) -> Option<&ProductStrategy> {
        match self {
            Strategy::Product(s) => Some(s),
            Strategy::Joint(_) => None,
        }
    }

    pub fn as_joint(&self) -> Option<&JointStrategy> {
        match self {
            Strategy::Joint(j) => Some(j),
            Strategy::Product(_) => None,
        }
    }

    /// Joint form; product strategies are expanded to their outer product.
    pub fn to_joint(&self, shape: &GameShape) -> Result<JointStrategy> {
        match self {
            Strategy::Product(s) => s.outer(shape),
            Strategy::Joint(j) => {
                shape.check_same(j.shape(), "joint strategy")?;
                Ok(j.clone())
            }
        }
    }

    /// Distance in the metric matching the strategy kind. `None` if the kinds differ.
    pub fn distance(&self, other: &Strategy) -> Option<f64> {
        match (self, other) {
            (Strategy::Product(a), Strategy::Product(b)) => Some(a.distance(b)),
            (Strategy::Joint(a), Strategy::Joint(b)) => Some(a.distance(b)),
            _ => None,
        }
    }
}

impl From<ProductStrategy> for Strategy {
    fn from(s: ProductStrategy) -> Self {
        Strategy::Product(s)
    }
}

impl From<JointStrategy> for Strategy {
    fn from(j: JointStrategy) -> Self {
        Strategy::Joint(j)
    }
}

/// `u_i(π) = Σ_a π(a) u_i(a)`.
pub fn expected_utility_joint(game: &Game, player: usize, pi: &JointStrategy) -> Result<f64> {
    game.shape.check_same(pi.shape(), "joint strategy")?;
    game.shape.check_player(player)?;
    Ok(dot(game.payoffs(player), pi.probs()))
}

/// `u_i(σ)` evaluated by contracting the payoff tensor one axis at a time.
pub fn expected_utility_product(game: &Game, player: usize, sigma: &ProductStrategy) -> Result<f64> {
    sigma.check_shape(&game.shape)?;
    game.shape.check_player(player)?;
    let strategies: Vec<&[f64]> = sigma.players().iter().map(Vec::as_slice).collect();
    let partial = contract_except(&game.shape, game.payoffs(player), &strategies, player);
    Ok(dot(&partial, sigma.player(player)))
}

/// Marginal distribution of `player`'s action under `pi`.
pub fn marginal(pi: &JointStrategy, player: usize) -> Result<Vec<f64>> {
    let shape = pi.shape();
    shape.check_player(player)?;
    let mut out = vec![0.0; shape.actions(player)];
    for (idx, &p) in pi.probs().iter().enumerate() {
        out[shape.action_of(idx, player)] += p;
    }
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Contracts `tensor` against every player's vector except `keep`'s.
///
/// Entry `b` of the result is `Σ_{a_{-keep}} T(b, a_{-keep}) Π_{k≠keep} s_k(a_k)`.
/// Axes are contracted from the fastest one inward so the cost is linear
/// in the tensor size.
pub(crate) fn contract_except(shape: &GameShape, tensor: &[f64], strategies: &[&[f64]], keep: usize) -> Vec<f64> {
    let n = shape.num_players();
    let mut cur: Vec<f64> = tensor.to_vec();
    // Axes not yet contracted, in slowest-to-fastest order.
    let mut dims: Vec<usize> = shape.action_counts().to_vec();
    for axis in (0..n).rev() {
        if axis == keep {
            continue;
        }
        let m = dims[axis];
        let inner: usize = dims[axis + 1..].iter().product();
        let outer: usize = dims[..axis].iter().product();
        let s = strategies[axis];
        let mut next = vec![0.0; outer * inner];
        for o in 0..outer {
            for (a, &w) in s.iter().enumerate().take(m) {
                if w == 0.0 {
                    continue;
                }
                let src = &cur[(o * m + a) * inner..(o * m + a + 1) * inner];
                let dst = &mut next[o * inner..(o + 1) * inner];
                for (d, x) in dst.iter_mut().zip(src) {
                    *d += w * x;
                }
            }
        }
        cur = next;
        dims[axis] = 1;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity2x2() -> Game {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        Game::bimatrix(&id, &id).unwrap()
    }

    #[test]
    fn shape_indexing_is_row_major() {
        let s = GameShape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.num_joint(), 24);
        assert_eq!(s.index(&[1, 2, 3]), 12 + 8 + 3);
        assert_eq!(s.decode(23), vec![1, 2, 3]);
        assert_eq!(s.with_action(s.index(&[1, 0, 2]), 1, 2), s.index(&[1, 2, 2]));
        assert_eq!("2x3x4".parse::<GameShape>().unwrap(), s);
        assert_eq!(s.to_string(), "2x3x4");
    }

    #[test]
    fn shape_rejects_bad_input() {
        assert!(GameShape::new(vec![3]).is_err());
        assert!(GameShape::new(vec![2, 0]).is_err());
        assert!(matches!(GameShape::new(vec![usize::MAX, 2]), Err(Error::Capacity(_))));
        assert!("2xq".parse::<GameShape>().is_err());
    }

    #[test]
    fn payoffs_outside_unit_interval_are_rejected() {
        let s = GameShape::new(vec![2, 2]).unwrap();
        let err = Game::new(s.clone(), vec![vec![0.0, 1.5, 0.0, 0.0], vec![0.0; 4]]);
        assert!(matches!(err, Err(Error::Invalid(_))));
        let g = Game::normalized(s, vec![vec![-1.0, 3.0, 0.0, 1.0], vec![0.0; 4]]).unwrap();
        assert_eq!(g.payoffs(0), &[0.0, 1.0, 0.25, 0.5]);
        assert_eq!(g.payoffs(1), &[0.25; 4]);
    }

    #[test]
    fn simplex_inputs_are_renormalised_within_tolerance() {
        let s = ProductStrategy::new(vec![vec![0.5, 0.5 + 5e-10], vec![1.0]]).unwrap();
        assert!((s.player(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(ProductStrategy::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(ProductStrategy::new(vec![vec![1.1, -0.1]]).is_err());
        let shape = GameShape::new(vec![2, 2]).unwrap();
        assert!(JointStrategy::new(shape, vec![0.25; 3]).is_err());
    }

    #[test]
    fn expected_utility_joint_examples() {
        let g = identity2x2();
        let shape = g.shape().clone();
        let uni = JointStrategy::uniform(&shape);
        assert!((expected_utility_joint(&g, 0, &uni).unwrap() - 0.5).abs() < 1e-15);
        let diag = JointStrategy::uniform_over(&shape, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(expected_utility_joint(&g, 0, &diag).unwrap(), 1.0);
        for idx in 0..4 {
            let a = shape.decode(idx);
            let pm = JointStrategy::pure(&shape, &a);
            assert_eq!(expected_utility_joint(&g, 1, &pm).unwrap(), g.payoff(1, &a));
        }
        let other = GameShape::new(vec![2, 3]).unwrap();
        assert!(expected_utility_joint(&g, 0, &JointStrategy::uniform(&other)).is_err());
    }

    #[test]
    fn expected_utility_product_examples() {
        let g = identity2x2();
        let shape = g.shape().clone();
        let mixed = ProductStrategy::uniform(&shape);
        assert!((expected_utility_product(&g, 0, &mixed).unwrap() - 0.5).abs() < 1e-15);
        let pure = ProductStrategy::pure(&shape, &[0, 0]);
        assert_eq!(expected_utility_product(&g, 0, &pure).unwrap(), 1.0);
        let off = ProductStrategy::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(expected_utility_product(&g, 0, &off).unwrap(), 0.0);
    }

    #[test]
    fn marginal_examples() {
        let shape = GameShape::new(vec![2, 2]).unwrap();
        assert_eq!(marginal(&JointStrategy::uniform(&shape), 0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            marginal(&JointStrategy::pure(&shape, &[0, 1]), 0).unwrap(),
            vec![1.0, 0.0]
        );
        let diag = JointStrategy::uniform_over(&shape, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(marginal(&diag, 1).unwrap(), vec![0.5, 0.5]);
        assert!(marginal(&diag, 2).is_err());
    }

    #[test]
    fn contraction_matches_brute_force() {
        let shape = GameShape::new(vec![2, 3, 2]).unwrap();
        let tensor: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        let s0 = [0.3, 0.7];
        let s1 = [0.2, 0.5, 0.3];
        let s2 = [0.9, 0.1];
        let strategies: [&[f64]; 3] = [&s0, &s1, &s2];
        for keep in 0..3 {
            let fast = contract_except(&shape, &tensor, &strategies, keep);
            let mut slow = vec![0.0; shape.actions(keep)];
            for idx in 0..shape.num_joint() {
                let a = shape.decode(idx);
                let w: f64 = (0..3).filter(|&k| k != keep).map(|k| strategies[k][a[k]]).product();
                slow[a[keep]] += w * tensor[idx];
            }
            for (x, y) in fast.iter().zip(&slow) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }
}
