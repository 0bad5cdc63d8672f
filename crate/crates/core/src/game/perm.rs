//! Permutations of players' action sets and their action on games and strategies.
//!
//! A permutation `ρ_i` of player `i` acts on any tensor indexed by joint
//! actions by `(ρ_i T)(a_i, a_{-i}) = T(ρ_i^{-1}(a_i), a_{-i})`, and on a
//! vector over `A_i` by `(ρ_i v)(a) = v(ρ_i^{-1}(a))`.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Game, GameShape, JointStrategy, ProductStrategy};
use crate::error::{Error, Result};

/// Largest group order `m!` for which orbits are enumerated exactly (`m <= 6`).
pub const ORBIT_ENUM_LIMIT: usize = 720;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PlayerPermutation {
    player: usize,
    /// `map[a] = ρ(a)`.
    map: Vec<usize>,
}

impl PlayerPermutation {
    pub fn new(player: usize, map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &v in &map {
            if v >= map.len() || std::mem::replace(&mut seen[v], true) {
                return Err(Error::invalid(format!(
                    "{map:?} is not a permutation of 0..{}",
                    map.len()
                )));
            }
        }
        Ok(PlayerPermutation { player, map })
    }

    pub fn identity(player: usize, m: usize) -> Self {
        PlayerPermutation {
            player,
            map: (0..m).collect(),
        }
    }

    /// Transposition of actions `a` and `b`.
    pub fn swap(player: usize, m: usize, a: usize, b: usize) -> Self {
        let mut map: Vec<usize> = (0..m).collect();
        map.swap(a, b);
        PlayerPermutation { player, map }
    }

    /// `a -> m - 1 - a`.
    pub fn reversal(player: usize, m: usize) -> Self {
        PlayerPermutation {
            player,
            map: (0..m).rev().collect(),
        }
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, a: usize) -> usize {
        self.map[a]
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (a, &b) in self.map.iter().enumerate() {
            inv[b] = a;
        }
        PlayerPermutation {
            player: self.player,
            map: inv,
        }
    }

    /// `(ρ v)(a) = v(ρ^{-1}(a))`.
    pub fn permute_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (a, &b) in self.map.iter().enumerate() {
            out[b] = v[a];
        }
        out
    }

    /// Orbits of the cyclic group generated by this permutation, each sorted.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.map.len()];
        let mut out = Vec::new();
        for start in 0..self.map.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut a = start;
            while !seen[a] {
                seen[a] = true;
                cycle.push(a);
                a = self.map[a];
            }
            cycle.sort_unstable();
            out.push(cycle);
        }
        out
    }
}

/// Product `ρ = ∘_i ρ_i` of per-player permutations; absent entries are identities.
///
/// Permutations of distinct players commute, so the composition order does not
/// affect the result.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GamePermutation {
    per_player: Vec<Option<PlayerPermutation>>,
}

impl GamePermutation {
    pub fn identity(num_players: usize) -> Self {
        GamePermutation {
            per_player: vec![None; num_players],
        }
    }

    pub fn single(num_players: usize, rho: PlayerPermutation) -> Result<Self> {
        let mut g = GamePermutation::identity(num_players);
        g.set(rho)?;
        Ok(g)
    }

    /// One map per player, `maps[i][a] = ρ_i(a)`.
    pub fn from_maps(maps: Vec<Vec<usize>>) -> Result<Self> {
        let per_player = maps
            .into_iter()
            .enumerate()
            .map(|(p, m)| PlayerPermutation::new(p, m).map(Some))
            .collect::<Result<Vec<_>>>()?;
        Ok(GamePermutation { per_player })
    }

    pub fn set(&mut self, rho: PlayerPermutation) -> Result<()> {
        let p = rho.player();
        if p >= self.per_player.len() {
            return Err(Error::dim(format!("player {p} out of range")));
        }
        self.per_player[p] = Some(rho);
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.per_player.len()
    }

    pub fn get(&self, player: usize) -> Option<&PlayerPermutation> {
        self.per_player[player].as_ref()
    }

    pub fn is_identity(&self) -> bool {
        self.per_player
            .iter()
            .all(|r| r.as_ref().is_none_or(PlayerPermutation::is_identity))
    }

    pub fn is_identity_for(&self, player: usize) -> bool {
        self.get(player).is_none_or(PlayerPermutation::is_identity)
    }

    pub fn inverse(&self) -> Self {
        GamePermutation {
            per_player: self
                .per_player
                .iter()
                .map(|r| r.as_ref().map(PlayerPermutation::inverse))
                .collect(),
        }
    }

    /// Only player `p`'s factor.
    pub fn component(&self, p: usize) -> Self {
        let mut g = GamePermutation::identity(self.num_players());
        g.per_player[p] = self.per_player[p].clone();
        g
    }

    /// Every factor except player `p`'s.
    pub fn without(&self, p: usize) -> Self {
        let mut g = self.clone();
        g.per_player[p] = None;
        g
    }

    /// Non-identity single-player factors.
    pub fn factors(&self) -> Vec<GamePermutation> {
        (0..self.num_players())
            .filter(|&p| !self.is_identity_for(p))
            .map(|p| self.component(p))
            .collect()
    }

    pub fn check_shape(&self, shape: &GameShape) -> Result<()> {
        if self.num_players() != shape.num_players() {
            return Err(Error::dim(format!(
                "permutation covers {} players, game has {}",
                self.num_players(),
                shape.num_players()
            )));
        }
        for (p, r) in self.per_player.iter().enumerate() {
            if let Some(r) = r {
                if r.len() != shape.actions(p) {
                    return Err(Error::dim(format!(
                        "permutation of player {p} has length {}, player has {} actions",
                        r.len(),
                        shape.actions(p)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Applies the permutation to an action of `player`.
    pub fn apply_action(&self, player: usize, a: usize) -> usize {
        self.get(player).map_or(a, |r| r.apply(a))
    }

    /// `src[t]` is the flat index that lands on flat index `t` after permuting,
    /// i.e. `(ρT)[t] = T[src[t]]`.
    fn source_indices(&self, shape: &GameShape) -> Vec<usize> {
        let inv = self.inverse();
        (0..shape.num_joint())
            .map(|t| {
                (0..shape.num_players()).fold(t, |idx, p| match inv.get(p) {
                    Some(r) => shape.with_action(idx, p, r.apply(shape.action_of(t, p))),
                    None => idx,
                })
            })
            .collect()
    }

    pub(crate) fn permute_tensor(&self, shape: &GameShape, tensor: &[f64]) -> Vec<f64> {
        if self.is_identity() {
            return tensor.to_vec();
        }
        self.source_indices(shape).into_iter().map(|s| tensor[s]).collect()
    }

    /// Applies `ρ_p` to a vector over player `p`'s actions.
    pub fn permute_player_vector(&self, p: usize, v: &[f64]) -> Vec<f64> {
        match self.get(p) {
            Some(r) => r.permute_vector(v),
            None => v.to_vec(),
        }
    }
}

/// `(ρ u)_j(a_i, a_{-i}) = u_j(ρ_i^{-1}(a_i), a_{-i})` for every player in `rho`.
pub fn permute_game(game: &Game, rho: &GamePermutation) -> Result<Game> {
    rho.check_shape(game.shape())?;
    let shape = game.shape();
    if rho.is_identity() {
        return Ok(game.clone());
    }
    let src = rho.source_indices(shape);
    let payoffs = game
        .all_payoffs()
        .iter()
        .map(|t| src.iter().map(|&s| t[s]).collect())
        .collect();
    Ok(Game::from_parts_unchecked(shape.clone(), payoffs))
}

pub fn permute_joint(pi: &JointStrategy, rho: &GamePermutation) -> Result<JointStrategy> {
    rho.check_shape(pi.shape())?;
    Ok(JointStrategy::from_raw(
        pi.shape().clone(),
        rho.permute_tensor(pi.shape(), pi.probs()),
    ))
}

pub fn permute_product(sigma: &ProductStrategy, rho: &GamePermutation) -> Result<ProductStrategy> {
    if rho.num_players() != sigma.num_players() {
        return Err(Error::dim("permutation and strategy disagree on player count"));
    }
    let per_player = sigma
        .players()
        .iter()
        .enumerate()
        .map(|(p, v)| match rho.get(p) {
            Some(r) if r.len() != v.len() => Err(Error::dim(format!(
                "permutation of player {p} has length {}, strategy has {}",
                r.len(),
                v.len()
            ))),
            Some(r) => Ok(r.permute_vector(v)),
            None => Ok(v.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProductStrategy::from_raw(per_player))
}

fn factorial_capped(m: usize) -> Option<usize> {
    (1..=m).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

/// All `m!` permutations of `0..m` in lexicographic order.
pub fn enumerate_permutations(m: usize) -> Result<Vec<Vec<usize>>> {
    match factorial_capped(m) {
        Some(f) if f <= ORBIT_ENUM_LIMIT => {}
        _ => {
            return Err(Error::capacity(format!(
                "{m}! permutations exceed the exact-enumeration limit of {ORBIT_ENUM_LIMIT}; \
                 use sampled orbits instead"
            )))
        }
    }
    let mut cur: Vec<usize> = (0..m).collect();
    let mut out = vec![cur.clone()];
    // Standard next-permutation step.
    loop {
        let Some(i) = (1..cur.len()).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..cur.len()).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    Ok(out)
}

/// Order of the product group `Π_{i∈players} G_i`, or `None` on overflow.
pub fn group_order(shape: &GameShape, players: &[usize]) -> Option<usize> {
    players.iter().try_fold(1usize, |acc, &p| {
        factorial_capped(shape.actions(p)).and_then(|f| acc.checked_mul(f))
    })
}

/// Every element of `Π_{i∈players} G_i` (other players fixed), in
/// lexicographic order with the lowest player index outermost.
pub fn enumerate_group(shape: &GameShape, players: &[usize]) -> Result<Vec<GamePermutation>> {
    let n = shape.num_players();
    let mut out = vec![GamePermutation::identity(n)];
    for &p in players {
        shape.check_player(p)?;
        let perms = enumerate_permutations(shape.actions(p))?;
        let mut next = Vec::with_capacity(out.len() * perms.len());
        for g in &out {
            for map in &perms {
                let mut h = g.clone();
                h.per_player[p] = Some(PlayerPermutation {
                    player: p,
                    map: map.clone(),
                });
                next.push(h);
            }
        }
        out = next;
    }
    Ok(out)
}

pub fn random_permutation<R: Rng + ?Sized>(player: usize, m: usize, rng: &mut R) -> PlayerPermutation {
    let mut map: Vec<usize> = (0..m).collect();
    map.shuffle(rng);
    PlayerPermutation { player, map }
}

/// Independent uniform permutation for every player.
pub fn random_game_permutation<R: Rng + ?Sized>(shape: &GameShape, rng: &mut R) -> GamePermutation {
    GamePermutation {
        per_player: (0..shape.num_players())
            .map(|p| Some(random_permutation(p, shape.actions(p), rng)))
            .collect(),
    }
}
