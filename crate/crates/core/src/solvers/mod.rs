//! Exact baseline solvers: pure-equilibrium enumeration, bimatrix support
//! enumeration and welfare-maximizing (coarse) correlated equilibria.

mod linsys;
mod simplex;

pub use linsys::{solve as solve_linear, LinearSolution};
pub use simplex::{simplex_solve, LinearProgram, SolveResult, SolveStatus, LP_FEAS_TOL, LP_SIZE_LIMIT};

use crate::error::{Error, Result};
use crate::game::{Game, JointStrategy, ProductStrategy, Strategy};
use crate::metrics::{approximation, SolutionConcept};

/// Largest number of joint actions scanned by [`enumerate_pure_ne`].
pub const PURE_NE_LIMIT: usize = 1_000_000;

/// Largest action count per player accepted by [`support_enumeration_bimatrix`].
pub const SUPPORT_ENUM_MAX_ACTIONS: usize = 8;

/// Largest number of joint actions accepted by [`max_welfare_equilibrium`].
pub const WELFARE_LP_LIMIT: usize = 10_000;

const PURE_TOL: f64 = 1e-12;
const SUPPORT_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-7;
const VERIFY_TOL: f64 = 1e-8;

/// Joint actions at which no player has a strictly improving pure deviation,
/// in increasing joint-index order.
pub fn enumerate_pure_ne(game: &Game) -> Result<Vec<Vec<usize>>> {
    let shape = game.shape();
    if shape.num_joint() > PURE_NE_LIMIT {
        return Err(Error::capacity(format!(
            "{} joint actions exceed the pure-NE limit of {PURE_NE_LIMIT}",
            shape.num_joint()
        )));
    }
    let mut out = Vec::new();
    for idx in 0..shape.num_joint() {
        let stable = (0..game.num_players()).all(|i| {
            let u = game.payoffs(i);
            (0..shape.actions(i)).all(|b| u[shape.with_action(idx, i, b)] <= u[idx] + PURE_TOL)
        });
        if stable {
            out.push(shape.decode(idx));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportEnumeration {
    pub equilibria: Vec<ProductStrategy>,
    /// Set when some equal-size support pair had a singular indifference
    /// system, in which case the list may miss equilibria.
    pub degenerate: bool,
}

fn masks(m: usize) -> impl Iterator<Item = u32> {
    1..(1u32 << m)
}

fn members(mask: u32, m: usize) -> Vec<usize> {
    (0..m).filter(|&k| mask & (1 << k) != 0).collect()
}

/// Mixed strategy over `support` making the opponent indifferent across
/// `targets`, where `pay(own, target)` is the opponent's payoff.
fn indifferent_mix(support: &[usize], targets: &[usize], pay: impl Fn(usize, usize) -> f64) -> (LinearSolution, usize) {
    let k = support.len();
    let mut a: Vec<Vec<f64>> = targets
        .iter()
        .map(|&t| {
            let mut row: Vec<f64> = support.iter().map(|&s| pay(s, t)).collect();
            row.push(-1.0);
            row
        })
        .collect();
    let mut b = vec![0.0; targets.len()];
    let mut sum = vec![1.0; k];
    sum.push(0.0);
    a.push(sum);
    b.push(1.0);
    (linsys::solve(&a, &b), k)
}

fn expand(support: &[usize], weights: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut v = vec![0.0; m];
    for (&s, &w) in support.iter().zip(weights) {
        if w < -SUPPORT_TOL {
            return None;
        }
        v[s] = w.max(0.0);
    }
    let total: f64 = v.iter().sum();
    (total > 0.0).then(|| v.into_iter().map(|x| x / total).collect())
}

/// All Nash equilibria of a two-player game found by support enumeration.
///
/// Support pairs are visited by size (equal sizes first, then unequal), and
/// within each group in increasing bitmask order. Candidates are verified
/// against every pure deviation and deduplicated by max-player L1 distance.
pub fn support_enumeration_bimatrix(game: &Game) -> Result<SupportEnumeration> {
    if game.num_players() != 2 {
        return Err(Error::dim(format!(
            "support enumeration needs two players, game has {}",
            game.num_players()
        )));
    }
    let shape = game.shape();
    let (m1, m2) = (shape.actions(0), shape.actions(1));
    if m1.max(m2) > SUPPORT_ENUM_MAX_ACTIONS {
        return Err(Error::capacity(format!(
            "support enumeration handles at most {SUPPORT_ENUM_MAX_ACTIONS} actions per player, got {shape}"
        )));
    }
    let a = |r: usize, c: usize| game.payoffs(0)[r * m2 + c];
    let b = |r: usize, c: usize| game.payoffs(1)[r * m2 + c];

    let mut pairs: Vec<(u32, u32)> = Vec::new();
    for k in 1..=m1.min(m2) {
        for s1 in masks(m1).filter(|s| s.count_ones() as usize == k) {
            for s2 in masks(m2).filter(|s| s.count_ones() as usize == k) {
                pairs.push((s1, s2));
            }
        }
    }
    for s1 in masks(m1) {
        for s2 in masks(m2).filter(|s2| s2.count_ones() != s1.count_ones()) {
            pairs.push((s1, s2));
        }
    }

    let mut out = SupportEnumeration {
        equilibria: Vec::new(),
        degenerate: false,
    };
    for (s1, s2) in pairs {
        let (rows, cols) = (members(s1, m1), members(s2, m2));
        let square = rows.len() == cols.len();
        let (sx, kx) = indifferent_mix(&rows, &cols, b);
        let (sy, ky) = indifferent_mix(&cols, &rows, |c, r| a(r, c));
        let (x, y) = match (sx, sy) {
            (LinearSolution::Unique(x), LinearSolution::Unique(y)) => (x, y),
            (LinearSolution::Underdetermined, _) | (_, LinearSolution::Underdetermined) => {
                out.degenerate |= square;
                continue;
            }
            _ => continue,
        };
        let (w, v) = (x[kx], y[ky]);
        let (Some(x), Some(y)) = (expand(&rows, &x[..kx], m1), expand(&cols, &y[..ky], m2)) else {
            continue;
        };
        let row_values = (0..m1).map(|r| (0..m2).map(|c| a(r, c) * y[c]).sum::<f64>());
        let col_values = (0..m2).map(|c| (0..m1).map(|r| b(r, c) * x[r]).sum::<f64>());
        let stable = row_values.into_iter().all(|val| val <= v + SUPPORT_TOL)
            && col_values.into_iter().all(|val| val <= w + SUPPORT_TOL);
        if !stable {
            continue;
        }
        let sigma = ProductStrategy::new(vec![x, y])?;
        if !out.equilibria.iter().any(|e| e.distance(&sigma) < DEDUP_TOL) {
            out.equilibria.push(sigma);
        }
    }
    Ok(out)
}

/// A correlated (`Ce`) or coarse correlated (`Cce`) equilibrium maximizing
/// social welfare, with its welfare. The result is re-verified against the
/// exploitability metrics.
pub fn max_welfare_equilibrium(game: &Game, concept: SolutionConcept) -> Result<(JointStrategy, f64)> {
    if concept == SolutionConcept::Ne {
        return Err(Error::Concept(
            "welfare LP needs a correlated concept (ce or cce)".into(),
        ));
    }
    let shape = game.shape();
    let nj = shape.num_joint();
    if nj > WELFARE_LP_LIMIT {
        return Err(Error::capacity(format!(
            "{nj} joint actions exceed the welfare LP limit of {WELFARE_LP_LIMIT}"
        )));
    }
    let n = game.num_players();
    let welfare: Vec<f64> = (0..nj).map(|a| (0..n).map(|i| game.payoffs(i)[a]).sum()).collect();
    let mut lp = LinearProgram::new(welfare)?;
    lp.add_eq(vec![1.0; nj], 1.0)?;
    for i in 0..n {
        let u = game.payoffs(i);
        for dev in 0..shape.actions(i) {
            let regret = |a: usize| u[shape.with_action(a, i, dev)] - u[a];
            match concept {
                SolutionConcept::Cce => lp.add_ub((0..nj).map(regret).collect(), 0.0)?,
                _ => {
                    for rec in (0..shape.actions(i)).filter(|&r| r != dev) {
                        let row = (0..nj)
                            .map(|a| if shape.action_of(a, i) == rec { regret(a) } else { 0.0 })
                            .collect();
                        lp.add_ub(row, 0.0)?;
                    }
                }
            }
        }
    }
    let res = simplex_solve(&lp)?;
    if res.status != SolveStatus::Optimal {
        return Err(Error::Lp(format!("welfare LP ended with status {:?}", res.status)));
    }
    let total: f64 = res.solution.iter().sum();
    let pi = JointStrategy::new(shape.clone(), res.solution.iter().map(|p| p / total).collect())?;
    let strategy = Strategy::Joint(pi);
    let gap = approximation(game, &strategy, concept)?;
    if gap > VERIFY_TOL {
        return Err(Error::Lp(format!(
            "welfare LP solution has {concept} approximation {gap:e}"
        )));
    }
    let Strategy::Joint(pi) = strategy else { unreachable!() };
    let sw = pi.probs().iter().zip(lp.objective()).map(|(p, w)| p * w).sum();
    Ok((pi, sw))
}
