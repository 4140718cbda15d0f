//! The modal transition system data model.
//!
//! A [`ModalSystem`] partitions its transitions into necessary and optional
//! ones. Systems are immutable once built: construct them through a
//! [`SystemDraft`] (or the textual format in [`crate::format`]), which checks
//! every structural invariant before handing out a value.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a state inside its owning system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

/// Index of an action label inside its owning system's alphabet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Necessary,
    Optional,
}

impl Modality {
    /// Keyword used by the textual model format.
    pub fn keyword(self) -> &'static str {
        match self {
            Modality::Necessary => "must",
            Modality::Optional => "opt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: StateId,
    pub action: ActionId,
    pub target: StateId,
    pub modality: Modality,
}

/// Outgoing edge as stored in the successor lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub action: ActionId,
    pub target: StateId,
    pub modality: Modality,
}

/// A structural problem found by [`SystemDraft::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("no initial state declared")]
    MissingInitial,
    #[error("initial state `{0}` is not a declared state")]
    InitialNotAState(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("transition {from} --{action}--> {target} uses undeclared state `{state}`")]
    UnknownState {
        from: String,
        action: String,
        target: String,
        state: String,
    },
    #[error("transition {from} --{action}--> {target} uses action `{action}` outside the alphabet")]
    UnknownAction {
        from: String,
        action: String,
        target: String,
    },
    #[error("transition {from} --{action}--> {target} is declared both necessary and optional")]
    ConflictingModality {
        from: String,
        action: String,
        target: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid system: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("system `{0}` has optional transitions and is not an LTS")]
    NotLts(String),
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Identifiers are nonempty strings over `[A-Za-z0-9_']`.
pub fn is_identifier(text: &str) -> bool {
    !text.is_empty() && text.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

/// An unchecked, name-based description of a system.
///
/// Duplicate entries are harmless. Nothing is inferred: every state and
/// action used by a transition must be declared explicitly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SystemDraft {
    pub name: String,
    pub initial: Option<String>,
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub necessary: Vec<(String, String, String)>,
    pub optional: Vec<(String, String, String)>,
}

impl SystemDraft {
    pub fn new(name: impl Into<String>) -> Self {
        SystemDraft {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn initial(mut self, state: &str) -> Self {
        self.initial = Some(state.to_string());
        self
    }

    pub fn state(mut self, state: &str) -> Self {
        self.states.push(state.to_string());
        self
    }

    pub fn action(mut self, action: &str) -> Self {
        self.alphabet.push(action.to_string());
        self
    }

    /// Adds a necessary transition, declaring its states and action if needed.
    pub fn must(self, source: &str, action: &str, target: &str) -> Self {
        self.transition(Modality::Necessary, source, action, target)
    }

    /// Adds an optional transition, declaring its states and action if needed.
    pub fn opt(self, source: &str, action: &str, target: &str) -> Self {
        self.transition(Modality::Optional, source, action, target)
    }

    fn transition(mut self, modality: Modality, source: &str, action: &str, target: &str) -> Self {
        for state in [source, target] {
            if !self.states.iter().any(|s| s == state) {
                self.states.push(state.to_string());
            }
        }
        if !self.alphabet.iter().any(|a| a == action) {
            self.alphabet.push(action.to_string());
        }
        let triple = (source.to_string(), action.to_string(), target.to_string());
        match modality {
            Modality::Necessary => self.necessary.push(triple),
            Modality::Optional => self.optional.push(triple),
        }
        self
    }

    /// Lists every invariant breach. An empty list means [`Self::build`]
    /// succeeds.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        for id in self.states.iter().chain(&self.alphabet).chain(self.initial.iter()) {
            if !is_identifier(id) {
                violations.push(Violation::InvalidIdentifier(id.clone()));
            }
        }
        match &self.initial {
            None => violations.push(Violation::MissingInitial),
            Some(initial) if !self.states.contains(initial) => {
                violations.push(Violation::InitialNotAState(initial.clone()))
            }
            Some(_) => {}
        }
        for (source, action, target) in self.necessary.iter().chain(&self.optional) {
            for state in [source, target] {
                if !self.states.contains(state) {
                    violations.push(Violation::UnknownState {
                        from: source.clone(),
                        action: action.clone(),
                        target: target.clone(),
                        state: state.clone(),
                    });
                }
            }
            if !self.alphabet.contains(action) {
                violations.push(Violation::UnknownAction {
                    from: source.clone(),
                    action: action.clone(),
                    target: target.clone(),
                });
            }
        }
        let mut reported = Vec::new();
        for triple in &self.necessary {
            if self.optional.contains(triple) && !reported.contains(&triple) {
                reported.push(triple);
                violations.push(Violation::ConflictingModality {
                    from: triple.0.clone(),
                    action: triple.1.clone(),
                    target: triple.2.clone(),
                });
            }
        }
        violations
    }

    pub fn build(&self) -> Result<ModalSystem, ModelError> {
        let violations = self.validate();
        if !violations.is_empty() {
            return Err(ModelError::Invalid(violations));
        }
        let mut builder = Interner::default();
        for state in &self.states {
            builder.state(state);
        }
        for action in &self.alphabet {
            builder.action(action);
        }
        let initial = builder.state(self.initial.as_deref().expect("validated"));
        let mut transitions = BTreeMap::new();
        for (modality, list) in [
            (Modality::Necessary, &self.necessary),
            (Modality::Optional, &self.optional),
        ] {
            for (source, action, target) in list {
                let key = (builder.state(source), builder.action(action), builder.state(target));
                transitions.insert(key, modality);
            }
        }
        Ok(ModalSystem::assemble(
            self.name.clone(),
            builder.states,
            builder.alphabet,
            initial,
            transitions,
        ))
    }
}

#[derive(Default)]
struct Interner {
    states: Vec<String>,
    alphabet: Vec<String>,
}

impl Interner {
    fn state(&mut self, name: &str) -> StateId {
        StateId(intern(&mut self.states, name))
    }

    fn action(&mut self, name: &str) -> ActionId {
        ActionId(intern(&mut self.alphabet, name))
    }
}

fn intern(table: &mut Vec<String>, name: &str) -> usize {
    match table.iter().position(|n| n == name) {
        Some(index) => index,
        None => {
            table.push(name.to_string());
            table.len() - 1
        }
    }
}

/// A validated modal transition system.
///
/// States and actions keep their declaration order; that order is the
/// deterministic order used by every algorithm and report in this crate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModalSystem {
    name: String,
    states: Vec<String>,
    alphabet: Vec<String>,
    initial: StateId,
    transitions: BTreeMap<(StateId, ActionId, StateId), Modality>,
    successors: Vec<Vec<Edge>>,
    state_index: HashMap<String, StateId>,
    action_index: HashMap<String, ActionId>,
}

impl ModalSystem {
    /// Builds a system from already-interned parts. Callers guarantee that
    /// every index is in range.
    pub(crate) fn assemble(
        name: String,
        states: Vec<String>,
        alphabet: Vec<String>,
        initial: StateId,
        transitions: BTreeMap<(StateId, ActionId, StateId), Modality>,
    ) -> Self {
        let mut successors = vec![Vec::new(); states.len()];
        for (&(source, action, target), &modality) in &transitions {
            successors[source.0].push(Edge {
                action,
                target,
                modality,
            });
        }
        let state_index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), StateId(i)))
            .collect();
        let action_index = alphabet
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), ActionId(i)))
            .collect();
        ModalSystem {
            name,
            states,
            alphabet,
            initial,
            transitions,
            successors,
            state_index,
            action_index,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state.0]
    }

    pub fn action_name(&self, action: ActionId) -> &str {
        &self.alphabet[action.0]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.state_index.get(name).copied()
    }

    pub fn action_id(&self, name: &str) -> Option<ActionId> {
        self.action_index.get(name).copied()
    }

    /// All transitions, ordered by (source, action, target) index.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.transitions
            .iter()
            .map(|(&(source, action, target), &modality)| Transition {
                source,
                action,
                target,
                modality,
            })
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn necessary(&self) -> impl Iterator<Item = Transition> + '_ {
        self.transitions().filter(|t| t.modality == Modality::Necessary)
    }

    pub fn optional(&self) -> impl Iterator<Item = Transition> + '_ {
        self.transitions().filter(|t| t.modality == Modality::Optional)
    }

    pub fn modality_of(&self, source: StateId, action: ActionId, target: StateId) -> Option<Modality> {
        self.transitions.get(&(source, action, target)).copied()
    }

    pub(crate) fn successor_table(&self) -> &[Vec<Edge>] {
        &self.successors
    }

    pub fn successors(&self, state: StateId) -> &[Edge] {
        &self.successors[state.0]
    }

    /// Whether `state` has an outgoing transition labelled `action`, of any
    /// modality.
    pub fn enables(&self, state: StateId, action: ActionId) -> bool {
        self.successors[state.0].iter().any(|e| e.action == action)
    }

    pub fn is_lts(&self) -> bool {
        self.transitions.values().all(|&m| m == Modality::Necessary)
    }

    /// True iff no state has two distinct outgoing transitions with the same
    /// action, whatever their modality.
    pub fn is_deterministic(&self) -> bool {
        self.successors
            .iter()
            .all(|edges| edges.windows(2).all(|pair| pair[0].action != pair[1].action))
    }

    /// States reachable from the initial state through any transition,
    /// flagged by index.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.states.len()];
        let mut queue = VecDeque::from([self.initial]);
        seen[self.initial.0] = true;
        while let Some(state) = queue.pop_front() {
            for edge in &self.successors[state.0] {
                if !seen[edge.target.0] {
                    seen[edge.target.0] = true;
                    queue.push_back(edge.target);
                }
            }
        }
        seen
    }

    /// The sub-system induced by the reachable states. Relative state order
    /// and the whole alphabet are kept.
    pub fn restrict_to_reachable(&self) -> ModalSystem {
        let reachable = self.reachable();
        if reachable.iter().all(|&r| r) {
            return self.clone();
        }
        let mut renumber = vec![None; self.states.len()];
        let mut states = Vec::new();
        for (index, name) in self.states.iter().enumerate() {
            if reachable[index] {
                renumber[index] = Some(StateId(states.len()));
                states.push(name.clone());
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter_map(|(&(source, action, target), &modality)| {
                Some(((renumber[source.0]?, action, renumber[target.0]?), modality))
            })
            .collect();
        ModalSystem::assemble(
            self.name.clone(),
            states,
            self.alphabet.clone(),
            renumber[self.initial.0].expect("initial state is reachable"),
            transitions,
        )
    }

    pub fn to_draft(&self) -> SystemDraft {
        let triple = |t: Transition| {
            (
                self.state_name(t.source).to_string(),
                self.action_name(t.action).to_string(),
                self.state_name(t.target).to_string(),
            )
        };
        SystemDraft {
            name: self.name.clone(),
            initial: Some(self.state_name(self.initial).to_string()),
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            necessary: self.necessary().map(triple).collect(),
            optional: self.optional().map(triple).collect(),
        }
    }

    /// Re-checks the structural invariants. Always empty for values built
    /// through this crate.
    pub fn validate(&self) -> Vec<Violation> {
        self.to_draft().validate()
    }

    /// Copy of this system in which the transitions for which `keep` returns
    /// `Some` are retained with the returned modality.
    pub fn map_transitions(&self, mut keep: impl FnMut(Transition) -> Option<Modality>) -> ModalSystem {
        let transitions = self
            .transitions()
            .filter_map(|t| keep(t).map(|m| ((t.source, t.action, t.target), m)))
            .collect();
        ModalSystem::assemble(
            self.name.clone(),
            self.states.clone(),
            self.alphabet.clone(),
            self.initial,
            transitions,
        )
    }

    /// Human-readable rendering of a transition of this system.
    pub fn describe(&self, t: Transition) -> String {
        let arrow = match t.modality {
            Modality::Necessary => "must",
            Modality::Optional => "opt",
        };
        format!(
            "{} --{}--> {} ({arrow})",
            self.state_name(t.source),
            self.action_name(t.action),
            self.state_name(t.target)
        )
    }
}

impl fmt::Display for ModalSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::format::serialize(self))
    }
}

/// A modal system without optional transitions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts(ModalSystem);

impl Lts {
    pub fn into_inner(self) -> ModalSystem {
        self.0
    }

    pub fn with_name(self, name: impl Into<String>) -> Self {
        Lts(self.0.with_name(name))
    }
}

impl TryFrom<ModalSystem> for Lts {
    type Error = ModelError;

    fn try_from(system: ModalSystem) -> Result<Self, Self::Error> {
        if system.is_lts() {
            Ok(Lts(system))
        } else {
            Err(ModelError::NotLts(system.name))
        }
    }
}

impl Deref for Lts {
    type Target = ModalSystem;

    fn deref(&self) -> &ModalSystem {
        &self.0
    }
}

impl AsRef<ModalSystem> for Lts {
    fn as_ref(&self) -> &ModalSystem {
        &self.0
    }
}
