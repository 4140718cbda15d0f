//! Word-coreachability between two systems.
//!
//! Two states are coreachable when some action word leads from each
//! system's initial state to the respective state. The empty word counts, so
//! the initial pair is always coreachable. Modality is ignored: both kinds of
//! transition extend words.

use std::collections::{BTreeMap, VecDeque};

use crate::model::{ModalSystem, StateId};

pub type Word = Vec<String>;

/// A coreachable pair with the first word found to reach it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreachEntry {
    pub left: StateId,
    pub right: StateId,
    pub witness: Word,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoreachRelation {
    left_system: String,
    right_system: String,
    witnesses: BTreeMap<(StateId, StateId), Word>,
    partners: Vec<Vec<StateId>>,
}

impl CoreachRelation {
    pub fn left_system(&self) -> &str {
        &self.left_system
    }

    pub fn right_system(&self) -> &str {
        &self.right_system
    }

    pub fn contains(&self, left: StateId, right: StateId) -> bool {
        self.witnesses.contains_key(&(left, right))
    }

    pub fn witness(&self, left: StateId, right: StateId) -> Option<&[String]> {
        self.witnesses.get(&(left, right)).map(Vec::as_slice)
    }

    /// Right-hand states coreachable with `left`, in state order.
    pub fn partners(&self, left: StateId) -> &[StateId] {
        &self.partners[left.0]
    }

    pub fn len(&self) -> usize {
        self.witnesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = CoreachEntry> + '_ {
        self.witnesses.iter().map(|(&(left, right), witness)| CoreachEntry {
            left,
            right,
            witness: witness.clone(),
        })
    }
}

/// Whether some word reaches `left` in the first system and `right` in the
/// second.
pub fn has_common_trace(relation: &CoreachRelation, left: StateId, right: StateId) -> bool {
    relation.contains(left, right)
}

/// Breadth-first search of the synchronised product from the initial pair.
/// Successor pairs are explored in (label, left target, right target) order,
/// so each witness is a shortest word and the lexicographically least among
/// the words BFS discovers first.
pub fn coreachable(left: &ModalSystem, right: &ModalSystem) -> CoreachRelation {
    let start = (left.initial(), right.initial());
    let mut witnesses = BTreeMap::from([(start, Word::new())]);
    let mut queue = VecDeque::from([start]);

    while let Some((p, q)) = queue.pop_front() {
        let mut steps = Vec::new();
        for edge in left.successors(p) {
            let label = left.action_name(edge.action);
            let Some(action) = right.action_id(label) else {
                continue;
            };
            for other in right.successors(q).iter().filter(|e| e.action == action) {
                steps.push((label, edge.target, other.target));
            }
        }
        steps.sort();
        for (label, p2, q2) in steps {
            if !witnesses.contains_key(&(p2, q2)) {
                let mut word = witnesses[&(p, q)].clone();
                word.push(label.to_string());
                witnesses.insert((p2, q2), word);
                queue.push_back((p2, q2));
            }
        }
    }

    let mut partners = vec![Vec::new(); left.state_count()];
    for &(p, q) in witnesses.keys() {
        partners[p.0].push(q);
    }
    CoreachRelation {
        left_system: left.name().to_string(),
        right_system: right.name().to_string(),
        witnesses,
        partners,
    }
}

/// Pairs of states of one system sharing an incoming word.
pub fn related_states(system: &ModalSystem) -> CoreachRelation {
    coreachable(system, system)
}

/// States reachable from the initial state by reading `word`, flagged by
/// index. Unknown labels lead nowhere.
pub fn states_after(system: &ModalSystem, word: &[String]) -> Vec<bool> {
    let mut current = vec![false; system.state_count()];
    current[system.initial().0] = true;
    for label in word {
        let mut next = vec![false; system.state_count()];
        if let Some(action) = system.action_id(label) {
            for state in system.state_ids().filter(|s| current[s.0]) {
                for edge in system.successors(state) {
                    if edge.action == action {
                        next[edge.target.0] = true;
                    }
                }
            }
        }
        current = next;
    }
    current
}
