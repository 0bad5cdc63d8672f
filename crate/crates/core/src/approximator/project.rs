//! Orbit-averaging operators on arbitrary strategy-valued maps, built as
//! compositions of the single-player operators. Exact enumeration only.

use crate::error::Result;
use crate::game::{
    enumerate_permutations, permute_game, permute_joint, Game, GamePermutation, JointStrategy, PlayerPermutation,
    ProductStrategy,
};

type ProductMap<'a> = dyn Fn(&Game) -> Result<ProductStrategy> + 'a;
type JointMap<'a> = dyn Fn(&Game) -> Result<JointStrategy> + 'a;

fn player_group(game: &Game, i: usize) -> Result<Vec<GamePermutation>> {
    let n = game.num_players();
    enumerate_permutations(game.shape().actions(i))?
        .into_iter()
        .map(|map| GamePermutation::single(n, PlayerPermutation::new(i, map)?))
        .collect()
}

fn average(blocks: impl Iterator<Item = Vec<f64>>, count: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for b in blocks {
        if acc.is_empty() {
            acc = vec![0.0; b.len()];
        }
        for (a, x) in acc.iter_mut().zip(b) {
            *a += x;
        }
    }
    acc.into_iter().map(|a| a / count as f64).collect()
}

/// Player `i`'s opponent-invariance operator: every other player's output is
/// averaged over permutations of `i`'s actions; `i`'s own output is kept.
fn o_step(f: &ProductMap<'_>, i: usize, game: &Game) -> Result<ProductStrategy> {
    let group = player_group(game, i)?;
    let outs = group
        .iter()
        .map(|rho| f(&permute_game(game, rho)?))
        .collect::<Result<Vec<_>>>()?;
    let own = f(game)?;
    let per_player = (0..game.num_players())
        .map(|j| {
            if j == i {
                own.player(i).to_vec()
            } else {
                average(outs.iter().map(|s| s.player(j).to_vec()), outs.len())
            }
        })
        .collect();
    ProductStrategy::new(per_player)
}

/// Player `i`'s self-equivariance operator: `i`'s output becomes the average
/// of `ρ_i^{-1} f(ρ_i u)_i`; other players' outputs are kept.
fn p_step(f: &ProductMap<'_>, i: usize, game: &Game) -> Result<ProductStrategy> {
    let group = player_group(game, i)?;
    let mut blocks = Vec::with_capacity(group.len());
    for rho in &group {
        let out = f(&permute_game(game, rho)?)?;
        blocks.push(rho.inverse().permute_player_vector(i, out.player(i)));
    }
    let own = f(game)?;
    own.with_player(i, average(blocks.into_iter(), group.len()))
}

fn q_step(f: &JointMap<'_>, i: usize, game: &Game) -> Result<JointStrategy> {
    let group = player_group(game, i)?;
    let mut blocks = Vec::with_capacity(group.len());
    for rho in &group {
        let out = f(&permute_game(game, rho)?)?;
        blocks.push(permute_joint(&out, &rho.inverse())?.into_probs());
    }
    JointStrategy::new(game.shape().clone(), average(blocks.into_iter(), group.len()))
}

fn o_from(f: &ProductMap<'_>, k: usize, game: &Game) -> Result<ProductStrategy> {
    if k == game.num_players() {
        return f(game);
    }
    let inner = |g: &Game| o_from(f, k + 1, g);
    o_step(&inner, k, game)
}

fn p_from(f: &ProductMap<'_>, k: usize, game: &Game) -> Result<ProductStrategy> {
    if k == game.num_players() {
        return f(game);
    }
    let inner = |g: &Game| p_from(f, k + 1, g);
    p_step(&inner, k, game)
}

fn q_from(f: &JointMap<'_>, k: usize, game: &Game) -> Result<JointStrategy> {
    if k == game.num_players() {
        return f(game);
    }
    let inner = |g: &Game| q_from(f, k + 1, g);
    q_step(&inner, k, game)
}

/// Opponent-invariant projection of `base`, evaluated at `game`.
pub fn project_o(base: &ProductMap<'_>, game: &Game) -> Result<ProductStrategy> {
    o_from(base, 0, game)
}

/// Player-equivariant projection of `base`, evaluated at `game`.
pub fn project_p(base: &ProductMap<'_>, game: &Game) -> Result<ProductStrategy> {
    p_from(base, 0, game)
}

/// Permutation-equivariant projection of a joint-strategy map, evaluated at `game`.
pub fn project_q(base: &JointMap<'_>, game: &Game) -> Result<JointStrategy> {
    q_from(base, 0, game)
}
