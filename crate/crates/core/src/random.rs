//! Seeded generator of random modal systems for property testing.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActionId, ModalSystem, Modality, StateId};

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub max_states: usize,
    pub alphabet: Vec<String>,
    /// Probability that each non-spanning (source, action, target) triple is
    /// present.
    pub density: f64,
    /// Probability that a present transition is optional.
    pub optional_ratio: f64,
}

/// Reproducible from `seed`. The state count is drawn from
/// `1..=max_states`, every state is reachable through a random spanning
/// tree, and density 0 yields the single-state system.
pub fn random_mts(seed: u64, spec: &RandomSpec) -> ModalSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_mts_with(&mut rng, spec, "random")
}

pub fn random_mts_with(rng: &mut impl Rng, spec: &RandomSpec, name: &str) -> ModalSystem {
    let actions = spec.alphabet.len();
    let states = if spec.density <= 0.0 || actions == 0 {
        1
    } else {
        rng.gen_range(1..=spec.max_states.max(1))
    };
    let modality = |rng: &mut dyn rand::RngCore| {
        if rng.gen_bool(spec.optional_ratio.clamp(0.0, 1.0)) {
            Modality::Optional
        } else {
            Modality::Necessary
        }
    };
    let mut transitions = BTreeMap::new();
    for target in 1..states {
        let source = rng.gen_range(0..target);
        let action = rng.gen_range(0..actions);
        transitions.insert((StateId(source), ActionId(action), StateId(target)), modality(rng));
    }
    if spec.density > 0.0 {
        for source in 0..states {
            for action in 0..actions {
                for target in 0..states {
                    let key = (StateId(source), ActionId(action), StateId(target));
                    if !transitions.contains_key(&key) && rng.gen_bool(spec.density.min(1.0)) {
                        transitions.insert(key, modality(rng));
                    }
                }
            }
        }
    }
    ModalSystem::assemble(
        name.to_string(),
        (0..states).map(|s| format!("q{s}")).collect(),
        spec.alphabet.clone(),
        StateId(0),
        transitions,
    )
}
