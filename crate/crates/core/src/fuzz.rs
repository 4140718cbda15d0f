//! Randomised property harness over small systems.
//!
//! Every iteration draws a chain of three related systems and checks the
//! laws that must hold (violations), and probes the two properties that are
//! known or suspected not to hold for NMTS refinement (findings): soundness
//! with respect to implementation sets, and closure of NMTS implementation
//! sets under bisimilarity.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bisim::{are_bisimilar, canonical_key, minimize};
use crate::coreach::{coreachable, related_states, states_after};
use crate::format::serialize;
use crate::impls::{subset_implementations, thorough_refines_bounded, EnumerationConfig, Strategy, ThoroughVerdict};
use crate::model::{ActionId, Lts, ModalSystem, Modality, StateId};
use crate::random::{random_mts_with, RandomSpec};
use crate::refine::{
    check_certificate, is_nmts, modal_refines, nmts_refines, refines, verify_relation, RefinementKind, StateRelation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub seed: u64,
    pub iterations: u64,
    pub max_states: usize,
    pub alphabet_size: usize,
    /// State bound for the bounded implementation-set checks.
    pub impl_bound: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 0,
            iterations: 1000,
            max_states: 4,
            alphabet_size: 2,
            impl_bound: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub iteration: u64,
    pub property: String,
    pub detail: String,
    /// The systems involved, in the textual model format.
    pub systems: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    /// How many times each property was exercised.
    pub checks: BTreeMap<String, u64>,
    /// Broken laws. Any entry here is a bug.
    pub violations: Vec<Finding>,
    /// Counterexamples to properties that are not expected to hold, capped at
    /// [`MAX_FINDINGS_PER_PROPERTY`] per property.
    pub findings: Vec<Finding>,
    pub finding_counts: BTreeMap<String, u64>,
    /// Checks abandoned because a search budget ran out.
    pub skipped: BTreeMap<String, u64>,
}

pub const MAX_FINDINGS_PER_PROPERTY: u64 = 5;

/// Extra split-and-refine pairs probed per iteration for NMTS unsoundness.
pub const SPLIT_PROBES: usize = 16;

pub const NMTS_SOUNDNESS: &str = "nmts-soundness";
pub const NMTS_BISIM_CLOSURE: &str = "nmts-impl-bisim-closure";

impl FuzzReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Run {
    report: FuzzReport,
    iteration: u64,
}

impl Run {
    fn check(&mut self, property: &str, ok: bool, detail: impl FnOnce() -> String, systems: &[&ModalSystem]) {
        *self.report.checks.entry(property.to_string()).or_default() += 1;
        if !ok {
            self.report.violations.push(Finding {
                iteration: self.iteration,
                property: property.to_string(),
                detail: detail(),
                systems: systems.iter().map(|s| serialize(s)).collect(),
            });
        }
    }

    fn finding(&mut self, property: &str, detail: String, systems: &[&ModalSystem]) {
        let count = self.report.finding_counts.entry(property.to_string()).or_default();
        *count += 1;
        if *count <= MAX_FINDINGS_PER_PROPERTY {
            self.report.findings.push(Finding {
                iteration: self.iteration,
                property: property.to_string(),
                detail,
                systems: systems.iter().map(|s| serialize(s)).collect(),
            });
        }
    }
}

pub fn run_fuzz(config: FuzzConfig) -> FuzzReport {
    let mut run = Run {
        report: FuzzReport {
            config,
            checks: BTreeMap::new(),
            violations: Vec::new(),
            findings: Vec::new(),
            finding_counts: BTreeMap::new(),
            skipped: BTreeMap::new(),
        },
        iteration: 0,
    };
    let alphabet: Vec<String> = ["a", "b", "c", "d"]
        .iter()
        .take(config.alphabet_size.clamp(1, 4))
        .map(|s| s.to_string())
        .collect();
    for iteration in 0..config.iterations {
        run.iteration = iteration;
        let mut rng =
            ChaCha8Rng::seed_from_u64(config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(iteration));
        iterate(&mut run, &mut rng, &config, &alphabet);
    }
    run.report
}

fn draw_spec(rng: &mut ChaCha8Rng, config: &FuzzConfig, alphabet: &[String]) -> RandomSpec {
    RandomSpec {
        max_states: config.max_states,
        alphabet: alphabet.to_vec(),
        density: rng.gen_range(0.1..0.45),
        optional_ratio: rng.gen_range(0.2..0.8),
    }
}

/// A random modal refinement step: optional transitions are kept, made
/// necessary or dropped. The identity relation witnesses `result ≼m system`.
fn refinement_step(rng: &mut ChaCha8Rng, system: &ModalSystem, name: &str) -> ModalSystem {
    system
        .map_transitions(|t| match t.modality {
            Modality::Necessary => Some(Modality::Necessary),
            Modality::Optional => match rng.gen_range(0..3) {
                0 => Some(Modality::Optional),
                1 => Some(Modality::Necessary),
                _ => None,
            },
        })
        .restrict_to_reachable()
        .with_name(name)
}

fn implementation_of(rng: &mut ChaCha8Rng, system: &ModalSystem, name: &str) -> Lts {
    let lts = system
        .map_transitions(|t| match t.modality {
            Modality::Necessary => Some(Modality::Necessary),
            Modality::Optional => rng.gen_bool(0.5).then_some(Modality::Necessary),
        })
        .restrict_to_reachable()
        .with_name(name);
    Lts::try_from(lts).expect("resolved")
}

/// Splits one state into two copies sharing its outgoing transitions;
/// incoming transitions are distributed randomly between them, and states
/// are renamed and shuffled. The result is bisimilar to `system`, with
/// modalities preserved.
pub fn split_state(rng: &mut impl Rng, system: &ModalSystem, name: &str) -> ModalSystem {
    let n = system.state_count();
    let split = StateId(rng.gen_range(0..n));
    let copy = StateId(n);
    let mut edges = BTreeMap::new();
    for t in system.transitions() {
        let target = if t.target == split && rng.gen_bool(0.5) {
            copy
        } else {
            t.target
        };
        edges.insert((t.source, t.action, target), t.modality);
        if t.source == split {
            edges.insert((copy, t.action, t.target), t.modality);
            if t.target == split {
                edges.insert((copy, t.action, copy), t.modality);
            }
        }
    }
    let mut order: Vec<usize> = (0..=n).collect();
    order.shuffle(rng);
    let transitions = edges
        .into_iter()
        .map(|((s, a, t), m)| ((StateId(order[s.0]), a, StateId(order[t.0])), m))
        .collect::<BTreeMap<(StateId, ActionId, StateId), Modality>>();
    let mut names = vec![String::new(); n + 1];
    for (old, &new) in order.iter().enumerate() {
        names[new] = format!("v{old}");
    }
    ModalSystem::assemble(
        name.to_string(),
        names,
        system.alphabet().to_vec(),
        StateId(order[system.initial().0]),
        transitions,
    )
}

/// A bisimilar copy of `lts`, see [`split_state`].
pub fn bisimilar_variant(rng: &mut impl Rng, lts: &Lts, name: &str) -> Lts {
    Lts::try_from(split_state(rng, lts, name)).expect("only necessary transitions")
}

fn iterate(run: &mut Run, rng: &mut ChaCha8Rng, config: &FuzzConfig, alphabet: &[String]) {
    let spec = draw_spec(rng, config, alphabet);
    let u = random_mts_with(rng, &spec, "U");
    // Splitting before resolving lets the copies of a state be refined
    // differently, which identity-based steps never do.
    let t = if rng.gen_bool(0.25) {
        let split = split_state(rng, &u, "T");
        refinement_step(rng, &split, "T")
    } else if rng.gen_bool(0.35) {
        refinement_step(rng, &u, "T")
    } else {
        let spec = draw_spec(rng, config, alphabet);
        random_mts_with(rng, &spec, "T")
    };
    let s = if rng.gen_bool(0.25) {
        let split = split_state(rng, &t, "S");
        refinement_step(rng, &split, "S")
    } else if rng.gen_bool(0.35) {
        refinement_step(rng, &t, "S")
    } else {
        let spec = draw_spec(rng, config, alphabet);
        random_mts_with(rng, &spec, "S")
    };

    // Coreachability witnesses replay, and related states are symmetric.
    let rel = coreachable(&s, &t);
    let replay_ok = rel
        .entries()
        .all(|e| states_after(&s, &e.witness)[e.left.0] && states_after(&t, &e.witness)[e.right.0]);
    run.check(
        "coreach-witness",
        replay_ok,
        || "witness does not replay".into(),
        &[&s, &t],
    );
    let related = related_states(&s);
    let symmetric = related.entries().all(|e| related.contains(e.right, e.left));
    run.check(
        "related-symmetric",
        symmetric,
        || "related_states not symmetric".into(),
        &[&s],
    );

    for x in [&s, &t, &u] {
        run.check(
            "modal-reflexive",
            refines(x, x, RefinementKind::Modal),
            || "X not ≼m X".into(),
            &[x],
        );
        if is_nmts(x).is_ok() {
            run.check(
                "nmts-reflexive",
                refines(x, x, RefinementKind::Nmts),
                || "X not ≼n X".into(),
                &[x],
            );
        }
    }

    let st_m = modal_refines(&s, &t);
    let tu_m = modal_refines(&t, &u);
    let su_m = refines(&s, &u, RefinementKind::Modal);
    for (left, right, cert) in [(&s, &t, &st_m), (&t, &u, &tu_m)] {
        run.check(
            "certificate-coherence",
            check_certificate(left, right, cert),
            || {
                format!(
                    "modal certificate for {} ≼m {} does not re-verify",
                    left.name(),
                    right.name()
                )
            },
            &[left, right],
        );
    }
    if st_m.holds() && tu_m.holds() {
        run.check(
            "modal-transitive",
            su_m,
            || "S ≼m T ≼m U but S ⋠m U".into(),
            &[&s, &t, &u],
        );
    }

    let st_n = nmts_refines(&s, &t, true).expect("allowed");
    run.check(
        "certificate-coherence",
        check_certificate(&s, &t, &st_n),
        || "nmts certificate does not re-verify".into(),
        &[&s, &t],
    );
    if st_n.holds() {
        let relation = StateRelation::from_names(&s, &t, RefinementKind::Modal.into(), &st_n.relation)
            .expect("names from the same systems");
        let as_modal = verify_relation(&s, &t, &relation, RefinementKind::Modal).expect("well-formed");
        run.check(
            "nmts-implies-modal",
            st_m.holds() && as_modal.is_empty(),
            || "S ≼n T but not S ≼m T".into(),
            &[&s, &t],
        );
    }

    let bounded = |kind| EnumerationConfig::new(kind, Strategy::Exhaustive, config.impl_bound).allow_non_nmts(true);
    if st_m.holds() {
        match thorough_refines_bounded(&s, &t, bounded(RefinementKind::Modal)) {
            Ok(verdict) => run.check(
                "modal-soundness",
                verdict.holds(),
                || "S ≼m T but a bounded implementation of S is not one of T".into(),
                &[&s, &t],
            ),
            Err(_) => *run.report.skipped.entry("modal-soundness".to_string()).or_default() += 1,
        }
    }

    for (left, right) in [(&s, &t), (&t, &u)] {
        if is_nmts(left).is_err() || is_nmts(right).is_err() || !refines(left, right, RefinementKind::Nmts) {
            continue;
        }
        *run.report.checks.entry(NMTS_SOUNDNESS.to_string()).or_default() += 1;
        let verdict = thorough_refines_bounded(left, right, bounded(RefinementKind::Nmts));
        if verdict.is_err() {
            *run.report.skipped.entry(NMTS_SOUNDNESS.to_string()).or_default() += 1;
        }
        if let Ok(ThoroughVerdict::Counterexample { implementation, .. }) = verdict {
            run.finding(
                NMTS_SOUNDNESS,
                format!(
                    "{} ≼n {}, yet the third system implements {} and not {}",
                    left.name(),
                    right.name(),
                    left.name(),
                    right.name()
                ),
                &[left, right, &implementation],
            );
        }
    }

    // Cheap unsoundness probe: T is U with one state split and then refined,
    // and the candidates are T's substructure implementations together with
    // their quotients under bisimilarity.
    for _ in 0..SPLIT_PROBES {
        let spec = draw_spec(rng, config, alphabet);
        let u = random_mts_with(rng, &spec, "U");
        let split = split_state(rng, &u, "T");
        let t = refinement_step(rng, &split, "T");
        if is_nmts(&u).is_err() || is_nmts(&t).is_err() || !refines(&t, &u, RefinementKind::Nmts) {
            continue;
        }
        *run.report.checks.entry(NMTS_SOUNDNESS.to_string()).or_default() += 1;
        let config = EnumerationConfig::new(RefinementKind::Nmts, Strategy::Subset, config.impl_bound);
        let Ok(set) = subset_implementations(&t, config) else {
            *run.report.skipped.entry(NMTS_SOUNDNESS.to_string()).or_default() += 1;
            continue;
        };
        let witness = set.members().find_map(|(_, member)| {
            let quotient = minimize(member).with_name("I");
            [member.clone().with_name("I"), quotient]
                .into_iter()
                .find(|c| refines(c, &t, RefinementKind::Nmts) && !refines(c, &u, RefinementKind::Nmts))
        });
        if let Some(implementation) = witness {
            run.finding(
                NMTS_SOUNDNESS,
                "T ≼n U, yet the third system implements T and not U".into(),
                &[&t, &u, &implementation],
            );
        }
    }

    // Bisimilarity laws and canonical keys.
    let i = implementation_of(rng, &s, "I");
    let j = bisimilar_variant(rng, &i, "J");
    let k = implementation_of(rng, &t, "K");
    let key = |x: &Lts| canonical_key(x).expect("small systems");
    run.check(
        "bisim-reflexive",
        are_bisimilar(&i, &i),
        || "I not bisimilar to itself".into(),
        &[&i],
    );
    run.check(
        "bisim-variant",
        are_bisimilar(&i, &j),
        || "split variant not bisimilar".into(),
        &[&i, &j],
    );
    run.check(
        "bisim-symmetric",
        are_bisimilar(&i, &k) == are_bisimilar(&k, &i),
        || "bisimilarity not symmetric".into(),
        &[&i, &k],
    );
    if are_bisimilar(&j, &k) {
        run.check(
            "bisim-transitive",
            are_bisimilar(&i, &k),
            || "bisimilarity not transitive".into(),
            &[&i, &j, &k],
        );
    }
    for (x, y) in [(&i, &j), (&i, &k), (&j, &k)] {
        run.check(
            "key-agreement",
            (key(x) == key(y)) == are_bisimilar(x, y),
            || "canonical key disagrees with bisimilarity".into(),
            &[x, y],
        );
    }

    // Implementation sets and bisimilarity.
    if refines(&i, &s, RefinementKind::Modal) {
        run.check(
            "modal-impl-bisim-closure",
            refines(&j, &s, RefinementKind::Modal),
            || "a bisimilar copy of an implementation is rejected by ≼m".into(),
            &[&s, &i, &j],
        );
    }
    if is_nmts(&s).is_ok() {
        *run.report.checks.entry(NMTS_BISIM_CLOSURE.to_string()).or_default() += 1;
        let (ij, jj) = (
            refines(&i, &s, RefinementKind::Nmts),
            refines(&j, &s, RefinementKind::Nmts),
        );
        if ij != jj {
            run.finding(
                NMTS_BISIM_CLOSURE,
                "two bisimilar LTS disagree on ≼n against the same NMTS".into(),
                &[&s, &i, &j],
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_runs_are_reproducible() {
        let config = FuzzConfig {
            seed: 11,
            iterations: 40,
            ..FuzzConfig::default()
        };
        assert_eq!(run_fuzz(config), run_fuzz(config));
    }

    #[test]
    fn variants_are_bisimilar() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = RandomSpec {
            max_states: 4,
            alphabet: vec!["a".into(), "b".into()],
            density: 0.3,
            optional_ratio: 0.0,
        };
        for _ in 0..100 {
            let lts = Lts::try_from(random_mts_with(&mut rng, &spec, "L")).unwrap();
            let variant = bisimilar_variant(&mut rng, &lts, "V");
            assert_eq!(variant.state_count(), lts.state_count() + 1);
            assert!(are_bisimilar(&lts, &variant));
        }
    }
}
