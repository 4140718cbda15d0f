//! Shared fixtures and brute-force oracles for the integration tests. The
//! oracles follow the definitions literally and share no code with the
//! library's decision procedures.

#![allow(dead_code)]

use std::collections::BTreeSet;

use nmts::{parse_system, Lts, ModalSystem, Modality, StateId, SystemDraft};
use proptest::prelude::*;

macro_rules! corpus {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../../../cli/corpus/", $name)))),*]
    };
}

const CORPUS: &[(&str, &str)] = corpus!(
    "fig1_s.mts",
    "fig1_t.mts",
    "fig2_s.mts",
    "fig2_t.mts",
    "fig3_s.mts",
    "fig3_t.mts",
    "fig3_i.mts",
    "fig3_gap.mts",
    "fig4_i.mts",
    "fig4_i_prime.mts",
    "fig5_s.mts",
    "fig5_t.mts",
    "fig5_s_cut.mts",
    "fig6_u.mts",
    "fig6_t.mts",
    "fig6_s.mts",
    "fig6_t_u.rel",
    "fig6_s_t.rel",
    "nondet_s.mts",
    "nondet_t.mts",
    "nondet_t_impl.mts",
    "coin_spec.mts",
    "coin_infinite.mts",
    "coin_once.mts",
    "coin_heads_only.mts",
);

pub fn text(file: &str) -> &'static str {
    CORPUS
        .iter()
        .find(|(name, _)| *name == file)
        .unwrap_or_else(|| panic!("no corpus file {file}"))
        .1
}

pub fn model(file: &str) -> ModalSystem {
    parse_system(text(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn lts(file: &str) -> Lts {
    Lts::try_from(model(file)).unwrap()
}

/// Strategy for small systems over `alphabet`, unreachable states included.
pub fn arb_system(max_states: usize, alphabet: &'static [&'static str], lts_only: bool) -> BoxedStrategy<ModalSystem> {
    (1..=max_states)
        .prop_flat_map(move |n| {
            let transition = (0..n, 0..alphabet.len().max(1), 0..n, any::<bool>());
            (
                Just(n),
                proptest::collection::vec(transition, 0..=n * n * alphabet.len()),
            )
        })
        .prop_map(move |(n, transitions)| {
            let mut draft = SystemDraft::new("P").initial("p0");
            for s in 0..n {
                draft = draft.state(&format!("p{s}"));
            }
            for a in alphabet {
                draft = draft.action(a);
            }
            let mut seen = BTreeSet::new();
            for (s, a, t, optional) in transitions {
                if alphabet.is_empty() || !seen.insert((s, a, t)) {
                    continue;
                }
                let (s, t) = (format!("p{s}"), format!("p{t}"));
                draft = if optional && !lts_only {
                    draft.opt(&s, alphabet[a], &t)
                } else {
                    draft.must(&s, alphabet[a], &t)
                };
            }
            draft.build().expect("generated draft is valid")
        })
        .boxed()
}

/// Explicit transition table of one system, addressed by action name.
struct Table {
    states: usize,
    initial: usize,
    /// (source, action, target, necessary)
    edges: Vec<(usize, String, usize, bool)>,
}

impl Table {
    fn of(system: &ModalSystem) -> Self {
        Table {
            states: system.state_count(),
            initial: system.initial().0,
            edges: system
                .transitions()
                .map(|t| {
                    (
                        t.source.0,
                        system.action_name(t.action).to_string(),
                        t.target.0,
                        t.modality == Modality::Necessary,
                    )
                })
                .collect(),
        }
    }

    fn post(&self, from: &BTreeSet<usize>, action: &str) -> BTreeSet<usize> {
        self.edges
            .iter()
            .filter(|(s, a, _, _)| from.contains(s) && a == action)
            .map(|&(_, _, t, _)| t)
            .collect()
    }
}

/// All pairs `(p, q)` such that some word leads from the initial states to
/// both `p` and `q`, found by enumerating words. Words longer than
/// `|left| * |right|` cannot reach new pairs.
fn word_pairs(left: &Table, right: &Table, alphabet: &BTreeSet<String>) -> BTreeSet<(usize, usize)> {
    let mut found = BTreeSet::new();
    let limit = left.states * right.states;
    let mut frontier = vec![(BTreeSet::from([left.initial]), BTreeSet::from([right.initial]))];
    for _ in 0..=limit {
        let mut next = Vec::new();
        for (l, r) in &frontier {
            for &p in l {
                for &q in r {
                    found.insert((p, q));
                }
            }
            for a in alphabet {
                let (l2, r2) = (left.post(l, a), right.post(r, a));
                if !l2.is_empty() && !r2.is_empty() {
                    next.push((l2, r2));
                }
            }
        }
        next.sort();
        next.dedup();
        frontier = next;
    }
    found
}

fn labels(systems: &[&ModalSystem]) -> BTreeSet<String> {
    systems.iter().flat_map(|s| s.alphabet().iter().cloned()).collect()
}

fn satisfies(
    left: &Table,
    right: &Table,
    relation: &BTreeSet<(usize, usize)>,
    nmts: Option<(&BTreeSet<(usize, usize)>, &BTreeSet<(usize, usize)>)>,
) -> bool {
    relation.iter().all(|&(p, q)| {
        let must_ok = right.edges.iter().filter(|e| e.0 == q && e.3).all(|(_, a, q2, _)| {
            left.edges
                .iter()
                .any(|(s, b, p2, must)| *s == p && b == a && *must && relation.contains(&(*p2, *q2)))
        });
        let may_ok = left.edges.iter().filter(|e| e.0 == p).all(|(_, a, p2, _)| {
            right
                .edges
                .iter()
                .any(|(s, b, q2, _)| *s == q && b == a && relation.contains(&(*p2, *q2)))
        });
        let optional_ok = nmts.is_none_or(|(cross, related)| {
            right.edges.iter().filter(|e| e.0 == q && !e.3).all(|(_, a, q2, _)| {
                if !cross.contains(&(p, q)) {
                    return true;
                }
                let someone_enables = related
                    .iter()
                    .filter(|&&(x, _)| x == p)
                    .any(|&(_, other)| left.edges.iter().any(|(s, b, _, _)| *s == other && b == a));
                !someone_enables
                    || left
                        .edges
                        .iter()
                        .any(|(s, b, p2, _)| *s == p && b == a && relation.contains(&(*p2, *q2)))
            })
        });
        must_ok && may_ok && optional_ok
    })
}

/// Refinement by trying every relation that contains the initial pair.
pub fn oracle_refines(left: &ModalSystem, right: &ModalSystem, nmts: bool) -> bool {
    let (l, r) = (Table::of(left), Table::of(right));
    let pairs: Vec<(usize, usize)> = (0..l.states).flat_map(|p| (0..r.states).map(move |q| (p, q))).collect();
    assert!(pairs.len() <= 16, "oracle limited to 16 pairs");
    let alphabet = labels(&[left, right]);
    let cross = word_pairs(&l, &r, &alphabet);
    let related = word_pairs(&l, &l, &alphabet);
    let context = nmts.then_some((&cross, &related));
    (0u32..1 << pairs.len()).any(|mask| {
        let relation: BTreeSet<_> = (0..pairs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| pairs[i])
            .collect();
        relation.contains(&(l.initial, r.initial)) && satisfies(&l, &r, &relation, context)
    })
}

/// Definition-level coherence check: no two states reached by a common word
/// where one has a necessary and the other an optional transition on the
/// same action.
pub fn oracle_is_nmts(system: &ModalSystem) -> bool {
    let t = Table::of(system);
    let related = word_pairs(&t, &t, &labels(&[system]));
    related.iter().all(|&(p, p2)| {
        !t.edges
            .iter()
            .any(|(s, a, _, must)| *s == p && *must && t.edges.iter().any(|(s2, b, _, m2)| *s2 == p2 && b == a && !m2))
    })
}

/// Strong bisimilarity of the initial states by trying every relation.
pub fn oracle_bisimilar(left: &ModalSystem, right: &ModalSystem) -> bool {
    let (l, r) = (Table::of(left), Table::of(right));
    let pairs: Vec<(usize, usize)> = (0..l.states).flat_map(|p| (0..r.states).map(move |q| (p, q))).collect();
    assert!(pairs.len() <= 16, "oracle limited to 16 pairs");
    (0u32..1 << pairs.len()).any(|mask| {
        let relation: BTreeSet<_> = (0..pairs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| pairs[i])
            .collect();
        relation.contains(&(l.initial, r.initial))
            && relation.iter().all(|&(p, q)| {
                let forth = l.edges.iter().filter(|e| e.0 == p).all(|(_, a, p2, _)| {
                    r.edges
                        .iter()
                        .any(|(s, b, q2, _)| *s == q && b == a && relation.contains(&(*p2, *q2)))
                });
                let back = r.edges.iter().filter(|e| e.0 == q).all(|(_, a, q2, _)| {
                    l.edges
                        .iter()
                        .any(|(s, b, p2, _)| *s == p && b == a && relation.contains(&(*p2, *q2)))
                });
                forth && back
            })
    })
}

/// Every LTS over `alphabet` with exactly `states` states, as raw transition
/// subsets. Initial state 0; unreachable states are kept.
pub fn raw_lts(alphabet: &[&str], states: usize) -> Vec<ModalSystem> {
    let slots: Vec<(usize, &str, usize)> = (0..states)
        .flat_map(|s| alphabet.iter().flat_map(move |a| (0..states).map(move |t| (s, *a, t))))
        .collect();
    assert!(slots.len() <= 16);
    (0u32..1 << slots.len())
        .map(|mask| {
            let mut draft = SystemDraft::new("raw").initial("r0");
            for s in 0..states {
                draft = draft.state(&format!("r{s}"));
            }
            for a in alphabet {
                draft = draft.action(a);
            }
            for (i, (s, a, t)) in slots.iter().enumerate() {
                if mask >> i & 1 == 1 {
                    draft = draft.must(&format!("r{s}"), a, &format!("r{t}"));
                }
            }
            draft.build().unwrap()
        })
        .collect()
}

/// Representatives of the bisimilarity classes among `systems`, using only
/// the brute-force oracle.
pub fn oracle_classes(systems: Vec<ModalSystem>) -> Vec<ModalSystem> {
    let mut classes: Vec<ModalSystem> = Vec::new();
    for system in systems {
        if !classes.iter().any(|c| oracle_bisimilar(c, &system)) {
            classes.push(system);
        }
    }
    classes
}

pub fn state(system: &ModalSystem, name: &str) -> StateId {
    system.state_id(name).unwrap_or_else(|| panic!("no state {name}"))
}
