//! Which permuted copies of the input a model evaluates, and how their
//! outputs are mapped back and averaged.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{enumerate_group, group_order, random_game_permutation, GamePermutation, GameShape};

/// Largest number of base evaluations per forward pass in exact mode.
pub const ORBIT_EVAL_LIMIT: usize = 20_000;

/// Largest per-player action count enumerated exactly (`6! = 720`).
const EXACT_MAX_ACTIONS: usize = 6;

/// Symmetry built into a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivarianceMode {
    /// Plain network, no symmetry.
    General,
    /// Opponent-permutation-invariant: `f(ρ_{-j} u)_j = f(u)_j`.
    Opi,
    /// Player-permutation-equivariant: `f(ρ_j u)_j = ρ_j f(u)_j`.
    Ppe,
    /// Both OPI and PPE.
    Both,
    /// Permutation-equivariant joint output: `f(ρ u) = ρ f(u)`.
    Pe,
}

impl EquivarianceMode {
    pub const ALL: [EquivarianceMode; 5] = [
        EquivarianceMode::General,
        EquivarianceMode::Opi,
        EquivarianceMode::Ppe,
        EquivarianceMode::Both,
        EquivarianceMode::Pe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EquivarianceMode::General => "general",
            EquivarianceMode::Opi => "opi",
            EquivarianceMode::Ppe => "ppe",
            EquivarianceMode::Both => "both",
            EquivarianceMode::Pe => "pe",
        }
    }
}

impl fmt::Display for EquivarianceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EquivarianceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EquivarianceMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "equivariance mode",
                name: s.to_string(),
            })
    }
}

/// Output component `c` is `Σ_{(e, w) ∈ contrib[c]} w · ρ_e^{-1} y_e` where
/// `y_e` is the base output on `ρ_e u`.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct OrbitPlan {
    pub evals: Vec<GamePermutation>,
    pub inverses: Vec<GamePermutation>,
    pub contrib: Vec<Vec<(usize, f64)>>,
    pub exact: bool,
}

fn key(rho: &GamePermutation, shape: &GameShape) -> Vec<Vec<usize>> {
    (0..shape.num_players())
        .map(|p| (0..shape.actions(p)).map(|a| rho.apply_action(p, a)).collect())
        .collect()
}

struct Builder<'a> {
    shape: &'a GameShape,
    index: HashMap<Vec<Vec<usize>>, usize>,
    evals: Vec<GamePermutation>,
    contrib: Vec<Vec<(usize, f64)>>,
}

impl Builder<'_> {
    fn add(&mut self, component: usize, rho: GamePermutation, weight: f64) {
        let k = key(&rho, self.shape);
        let e = *self.index.entry(k).or_insert_with(|| {
            self.evals.push(rho);
            self.evals.len() - 1
        });
        let list = &mut self.contrib[component];
        match list.iter_mut().find(|(i, _)| *i == e) {
            Some((_, w)) => *w += weight,
            None => list.push((e, weight)),
        }
    }
}

/// Players whose permutations feed output component `j`.
fn subgroup(mode: EquivarianceMode, n: usize, j: usize) -> Vec<usize> {
    match mode {
        EquivarianceMode::General => vec![],
        EquivarianceMode::Opi => (0..n).filter(|&p| p != j).collect(),
        EquivarianceMode::Ppe => vec![j],
        EquivarianceMode::Both | EquivarianceMode::Pe => (0..n).collect(),
    }
}

impl OrbitPlan {
    /// `components` is the number of output blocks (players for product
    /// heads, 1 for joint heads). Falls back to `samples` random permutations
    /// per component when exact enumeration is too large.
    pub fn build(
        shape: &GameShape,
        mode: EquivarianceMode,
        components: usize,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = shape.num_players();
        let players_for = |j: usize| subgroup(mode, n, j);
        let small = shape.action_counts().iter().all(|&m| m <= EXACT_MAX_ACTIONS);
        let total = (0..components).try_fold(0usize, |acc, j| {
            group_order(shape, &players_for(j)).and_then(|g| acc.checked_add(g))
        });
        let exact = mode == EquivarianceMode::General || small && total.is_some_and(|t| t <= ORBIT_EVAL_LIMIT);
        if !exact && samples == 0 {
            return Err(Error::capacity(format!(
                "orbit of shape {shape} is too large to enumerate and no samples were requested"
            )));
        }
        let mut b = Builder {
            shape,
            index: HashMap::new(),
            evals: Vec::new(),
            contrib: vec![Vec::new(); components],
        };
        if exact {
            for j in 0..components {
                let group = enumerate_group(shape, &players_for(j))?;
                let w = 1.0 / group.len() as f64;
                for rho in group {
                    b.add(j, rho, w);
                }
            }
        } else {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let w = 1.0 / samples as f64;
            for _ in 0..samples {
                let full = random_game_permutation(shape, &mut rng);
                for j in 0..components {
                    let rho = match mode {
                        EquivarianceMode::General => GamePermutation::identity(n),
                        EquivarianceMode::Opi => full.without(j),
                        EquivarianceMode::Ppe => full.component(j),
                        EquivarianceMode::Both | EquivarianceMode::Pe => full.clone(),
                    };
                    b.add(j, rho, w);
                }
            }
        }
        let inverses = b.evals.iter().map(GamePermutation::inverse).collect();
        Ok(OrbitPlan {
            evals: b.evals,
            inverses,
            contrib: b.contrib,
            exact,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(s: &str) -> GameShape {
        s.parse().unwrap()
    }

    #[test]
    fn exact_plan_sizes() {
        let s = shape("3x3");
        let p = OrbitPlan::build(&s, EquivarianceMode::General, 2, 64, 0).unwrap();
        assert_eq!(p.evals.len(), 1);
        let p = OrbitPlan::build(&s, EquivarianceMode::Opi, 2, 64, 0).unwrap();
        // Six permutations of each opponent, sharing the identity.
        assert_eq!(p.evals.len(), 11);
        assert!(p.exact);
        let p = OrbitPlan::build(&s, EquivarianceMode::Both, 2, 64, 0).unwrap();
        assert_eq!(p.evals.len(), 36);
        let p = OrbitPlan::build(&s, EquivarianceMode::Pe, 1, 64, 0).unwrap();
        assert_eq!(p.evals.len(), 36);
        for list in &p.contrib {
            let total: f64 = list.iter().map(|x| x.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn large_orbits_are_sampled() {
        let s = shape("7x2");
        let p = OrbitPlan::build(&s, EquivarianceMode::Both, 2, 16, 3).unwrap();
        assert!(!p.exact);
        assert!(p.evals.len() <= 16);
        assert_eq!(p, OrbitPlan::build(&s, EquivarianceMode::Both, 2, 16, 3).unwrap());
        assert!(OrbitPlan::build(&s, EquivarianceMode::Both, 2, 0, 3).is_err());
        // General never needs the orbit.
        assert!(OrbitPlan::build(&s, EquivarianceMode::General, 2, 0, 3).unwrap().exact);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in EquivarianceMode::ALL {
            assert_eq!(m.name().parse::<EquivarianceMode>().unwrap(), m);
        }
        assert!("both".parse::<EquivarianceMode>().is_ok());
        assert!("sideways".parse::<EquivarianceMode>().is_err());
    }
}
