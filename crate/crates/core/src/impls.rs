//! Bounded implementation sets and bounded thorough refinement.
//!
//! Implementation sets are infinite, so they are explored in two bounded
//! ways:
//!
//! * `subset`: resolve the optional transitions of the specification itself,
//!   promoting every subset to necessary and dropping the rest;
//! * `exhaustive`: enumerate every LTS over the specification's alphabet
//!   with at most `k` states.
//!
//! The exhaustive search generates each reachable LTS in breadth-first
//! numbering, state by state, and keeps every state's outgoing transitions
//! inside the specification's (modality-blind) trace language. That pruning
//! is exact: a candidate leaving the trace language can refine nothing. Sets
//! are deduplicated up to strong bisimilarity.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bisim::{bisimulation_partition, canonical_key, minimize, BisimError, CanonicalKey};
use crate::model::{ActionId, Edge, Lts, ModalSystem, Modality, StateId};
use crate::refine::{
    decide, is_nmts, refines, refines_with_certificate, ActionMaps, Certificate, RefineError, RefinementKind, Side,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Subset,
    Exhaustive,
}

/// Limits on the bounded searches. Exceeding any of them is an error, never
/// a silent truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    /// Bound on `k * k * |alphabet|` for the unguided enumeration of all LTS.
    pub transition_bits: u32,
    /// Bound on the number of optional transitions for the subset strategy.
    pub optional_transitions: usize,
    /// Bound on the number of complete state choices visited by the guided
    /// exhaustive search.
    pub search_nodes: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            transition_bits: 24,
            optional_transitions: 20,
            search_nodes: 1 << 24,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationConfig {
    pub max_states: usize,
    pub strategy: Strategy,
    pub kind: RefinementKind,
    pub allow_non_nmts: bool,
    pub budget: Budget,
}

impl EnumerationConfig {
    pub fn new(kind: RefinementKind, strategy: Strategy, max_states: usize) -> Self {
        EnumerationConfig {
            max_states,
            strategy,
            kind,
            allow_non_nmts: false,
            budget: Budget::default(),
        }
    }

    pub fn allow_non_nmts(mut self, allow: bool) -> Self {
        self.allow_non_nmts = allow;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("the state bound must be at least 1")]
    ZeroStates,
    #[error("{states} states over {actions} actions need {bits} transition bits, budget is {budget}")]
    TransitionBits {
        states: usize,
        actions: usize,
        bits: usize,
        budget: u32,
    },
    #[error("{count} optional transitions exceed the subset budget of {budget}")]
    OptionalTransitions { count: usize, budget: usize },
    #[error("search exceeded its budget of {0} nodes")]
    SearchNodes(u64),
    #[error("alphabets larger than 64 actions are not supported by the guided search")]
    AlphabetTooLarge,
    #[error(transparent)]
    Refine(#[from] RefineError),
    #[error(transparent)]
    Bisim(#[from] BisimError),
}

/// A bounded fragment of an implementation set, one representative per
/// bisimilarity class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImplementationSet {
    pub source: String,
    pub config: EnumerationConfig,
    members: BTreeMap<CanonicalKey, Lts>,
    /// Number of candidate LTS examined.
    pub candidates: u64,
    /// Classes containing both accepted and rejected candidates. Always
    /// empty for modal refinement.
    pub mixed_classes: BTreeSet<CanonicalKey>,
}

impl ImplementationSet {
    fn new(source: &ModalSystem, config: EnumerationConfig) -> Self {
        ImplementationSet {
            source: source.name().to_string(),
            config,
            members: BTreeMap::new(),
            candidates: 0,
            mixed_classes: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains_key(&self, key: &CanonicalKey) -> bool {
        self.members.contains_key(key)
    }

    /// Whether some member is bisimilar to `lts`.
    pub fn contains_class_of(&self, lts: &Lts) -> Result<bool, BisimError> {
        Ok(self.members.contains_key(&canonical_key(lts)?))
    }

    pub fn keys(&self) -> impl Iterator<Item = &CanonicalKey> {
        self.members.keys()
    }

    /// Members in key order.
    pub fn members(&self) -> impl Iterator<Item = (&CanonicalKey, &Lts)> {
        self.members.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ThoroughVerdict {
    /// No implementation with at most `max_states` states separates the two
    /// systems. This is a bounded claim only.
    HoldsUpTo { max_states: usize, candidates: u64 },
    /// `implementation` refines the left system but not the right one.
    Counterexample {
        implementation: Lts,
        accepted: Certificate,
        rejected: Certificate,
    },
}

impl ThoroughVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ThoroughVerdict::HoldsUpTo { .. })
    }
}

/// Resolves the optional transitions of `spec` in every possible way and
/// keeps the resulting LTS that refine `spec` under `config.kind`.
pub fn subset_implementations(spec: &ModalSystem, config: EnumerationConfig) -> Result<ImplementationSet, EnumError> {
    check_kind_precondition(spec, &config)?;
    let mut set = ImplementationSet::new(spec, config);
    let mut classes = ClassTracker::default();
    for_each_subset_candidate(spec, &config, &mut |candidate| {
        set.candidates += 1;
        let accepted = refines(candidate, spec, config.kind);
        classes.record(&mut set, candidate, accepted)?;
        Ok(ControlFlow::Continue(()))
    })?;
    set.mixed_classes = classes.mixed();
    Ok(set)
}

fn for_each_subset_candidate(
    spec: &ModalSystem,
    config: &EnumerationConfig,
    visit: &mut dyn FnMut(&Lts) -> Result<ControlFlow<()>, EnumError>,
) -> Result<(), EnumError> {
    let optional: Vec<_> = spec.optional().collect();
    if optional.len() > config.budget.optional_transitions {
        return Err(EnumError::OptionalTransitions {
            count: optional.len(),
            budget: config.budget.optional_transitions,
        });
    }
    for mask in 0u64..(1u64 << optional.len()) {
        let candidate = spec
            .map_transitions(|t| match t.modality {
                Modality::Necessary => Some(Modality::Necessary),
                Modality::Optional => {
                    let bit = optional.iter().position(|o| *o == t).expect("listed");
                    (mask >> bit & 1 == 1).then_some(Modality::Necessary)
                }
            })
            .restrict_to_reachable()
            .with_name(format!("{}_impl{mask}", spec.name()));
        let candidate = Lts::try_from(candidate).expect("all optional transitions resolved");
        if visit(&candidate)?.is_break() {
            break;
        }
    }
    Ok(())
}

fn check_kind_precondition(spec: &ModalSystem, config: &EnumerationConfig) -> Result<(), EnumError> {
    if config.max_states == 0 {
        return Err(EnumError::ZeroStates);
    }
    if config.kind == RefinementKind::Nmts && !config.allow_non_nmts {
        is_nmts(spec).map_err(|violation| RefineError::NotNmts {
            system: spec.name().to_string(),
            violation,
        })?;
    }
    Ok(())
}

#[derive(Default)]
struct ClassTracker {
    accepted: BTreeSet<CanonicalKey>,
    rejected: BTreeSet<CanonicalKey>,
}

impl ClassTracker {
    fn record(&mut self, set: &mut ImplementationSet, candidate: &Lts, accepted: bool) -> Result<(), EnumError> {
        let key = canonical_key(candidate)?;
        if accepted {
            set.members.entry(key.clone()).or_insert_with(|| candidate.clone());
            self.accepted.insert(key);
        } else {
            self.rejected.insert(key);
        }
        Ok(())
    }

    fn mixed(&self) -> BTreeSet<CanonicalKey> {
        self.accepted.intersection(&self.rejected).cloned().collect()
    }
}

/// Every LTS with at most `max_states` states over `alphabet`, restricted to
/// its reachable part and deduplicated up to bisimilarity. Emission order is
/// deterministic.
pub fn enumerate_lts(alphabet: &[String], max_states: usize, budget: Budget) -> Result<Vec<Lts>, EnumError> {
    if max_states == 0 {
        return Err(EnumError::ZeroStates);
    }
    let bits = max_states * max_states * alphabet.len();
    if bits > budget.transition_bits as usize {
        return Err(EnumError::TransitionBits {
            states: max_states,
            actions: alphabet.len(),
            bits,
            budget: budget.transition_bits,
        });
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut search = Search::new(alphabet, max_states, None, budget.search_nodes)?;
    search.run(&mut |candidate| {
        let lts = candidate.to_lts();
        if seen.insert(canonical_key(&lts)?) {
            out.push(lts);
        }
        Ok(ControlFlow::Continue(()))
    })?;
    Ok(out)
}

/// All implementations of `spec` with at most `config.max_states` states,
/// up to bisimilarity.
pub fn implementations_upto(spec: &ModalSystem, config: EnumerationConfig) -> Result<ImplementationSet, EnumError> {
    match config.strategy {
        Strategy::Subset => {
            let mut set = subset_implementations(spec, config)?;
            set.members
                .retain(|_, lts| minimize(lts).state_count() <= config.max_states);
            Ok(set)
        }
        Strategy::Exhaustive => {
            check_kind_precondition(spec, &config)?;
            let mut set = ImplementationSet::new(spec, config);
            let mut classes = ClassTracker::default();
            let mut search = Search::new(
                spec.alphabet(),
                config.max_states,
                Some(spec),
                config.budget.search_nodes,
            )?;
            let prepared = Prepared::new(spec.alphabet(), spec, config.kind);
            let modal = config.kind == RefinementKind::Modal;
            search.run(&mut |candidate| {
                set.candidates += 1;
                let accepted = prepared.accepts(candidate);
                // Modal refinement is closed under bisimilarity, so a class
                // is never mixed and its minimal member, which the search
                // also visits, is enough to represent it.
                if modal && !accepted {
                    return Ok(ControlFlow::Continue(()));
                }
                let lts = candidate.to_lts();
                if modal && bisimulation_partition(&lts).block_count() < lts.state_count() {
                    return Ok(ControlFlow::Continue(()));
                }
                classes.record(&mut set, &lts, accepted)?;
                Ok(ControlFlow::Continue(()))
            })?;
            set.mixed_classes = classes.mixed();
            Ok(set)
        }
    }
}

/// Searches for an implementation of `left` that is not an implementation
/// of `right`, among the candidates of `config.strategy` with at most
/// `config.max_states` states (up to bisimilarity). The first one in
/// enumeration order is returned with both certificates.
pub fn thorough_refines_bounded(
    left: &ModalSystem,
    right: &ModalSystem,
    config: EnumerationConfig,
) -> Result<ThoroughVerdict, EnumError> {
    check_kind_precondition(left, &config)?;
    check_kind_precondition(right, &config)?;
    let kind = config.kind;
    let mut found: Option<Lts> = None;
    let mut candidates = 0u64;
    match config.strategy {
        Strategy::Subset => for_each_subset_candidate(left, &config, &mut |lts| {
            if minimize(lts).state_count() > config.max_states {
                return Ok(ControlFlow::Continue(()));
            }
            candidates += 1;
            if refines(lts, left, kind) && !refines(lts, right, kind) {
                found = Some(lts.clone());
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        })?,
        Strategy::Exhaustive => {
            let accepts_left = Prepared::new(left.alphabet(), left, kind);
            let accepts_right = Prepared::new(left.alphabet(), right, kind);
            let mut search = Search::new(
                left.alphabet(),
                config.max_states,
                Some(left),
                config.budget.search_nodes,
            )?;
            search.run(&mut |candidate| {
                candidates += 1;
                if accepts_left.accepts(candidate) && !accepts_right.accepts(candidate) {
                    found = Some(candidate.to_lts());
                    return Ok(ControlFlow::Break(()));
                }
                Ok(ControlFlow::Continue(()))
            })?
        }
    }
    Ok(match found {
        None => ThoroughVerdict::HoldsUpTo {
            max_states: config.max_states,
            candidates,
        },
        Some(implementation) => {
            let accepted = refines_with_certificate(&implementation, left, kind, true)?;
            let rejected = refines_with_certificate(&implementation, right, kind, true)?;
            ThoroughVerdict::Counterexample {
                implementation,
                accepted,
                rejected,
            }
        }
    })
}

/// Implementations accepted by modal refinement but rejected by NMTS
/// refinement, by bisimilarity class.
pub fn impl_gap(spec: &ModalSystem, config: EnumerationConfig) -> Result<ImplementationSet, EnumError> {
    let modal = implementations_upto(
        spec,
        EnumerationConfig {
            kind: RefinementKind::Modal,
            ..config
        },
    )?;
    let nmts = implementations_upto(
        spec,
        EnumerationConfig {
            kind: RefinementKind::Nmts,
            ..config
        },
    )?;
    let mut gap = ImplementationSet::new(spec, config);
    gap.candidates = modal.candidates;
    gap.members = modal
        .members
        .into_iter()
        .filter(|(key, _)| !nmts.members.contains_key(key))
        .collect();
    gap.mixed_classes = nmts.mixed_classes;
    Ok(gap)
}

/// Bit set over the states of the guiding system.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct StateSet(Vec<u64>);

impl StateSet {
    fn empty(n: usize) -> Self {
        StateSet(vec![0; n.div_ceil(64).max(1)])
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= b;
        }
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(w, &bits)| (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b))
    }
}

/// Trace language of the guiding system, as a lazily determinised automaton.
struct Guide {
    /// Per guide state: mask of enabled candidate actions.
    enabled: Vec<u64>,
    /// Per guide state and candidate action: successor set.
    post: Vec<Vec<StateSet>>,
    dfa: RefCell<Dfa>,
}

/// Subset construction explored on demand. Index 0 is the initial set.
#[derive(Default)]
struct Dfa {
    sets: Vec<StateSet>,
    index: HashMap<StateSet, u32>,
    enabled: Vec<u64>,
    next: Vec<Vec<Option<u32>>>,
}

impl Guide {
    fn new(system: &ModalSystem, alphabet: &[String]) -> Self {
        let n = system.state_count();
        let map: Vec<Option<ActionId>> = alphabet.iter().map(|a| system.action_id(a)).collect();
        let mut enabled = vec![0u64; n];
        let mut post = vec![vec![StateSet::empty(n); alphabet.len()]; n];
        for state in system.state_ids() {
            for (index, action) in map.iter().enumerate() {
                let Some(action) = action else { continue };
                for edge in system.successors(state).iter().filter(|e| e.action == *action) {
                    enabled[state.0] |= 1 << index;
                    post[state.0][index].insert(edge.target.0);
                }
            }
        }
        let mut initial = StateSet::empty(n);
        initial.insert(system.initial().0);
        let guide = Guide {
            enabled,
            post,
            dfa: RefCell::new(Dfa::default()),
        };
        guide.intern(&mut guide.dfa.borrow_mut(), initial);
        guide
    }

    fn intern(&self, dfa: &mut Dfa, set: StateSet) -> u32 {
        if let Some(&id) = dfa.index.get(&set) {
            return id;
        }
        let id = dfa.sets.len() as u32;
        dfa.enabled.push(set.iter().fold(0, |acc, s| acc | self.enabled[s]));
        dfa.next.push(vec![None; self.post.first().map_or(0, Vec::len)]);
        dfa.index.insert(set.clone(), id);
        dfa.sets.push(set);
        id
    }

    fn step(&self, dfa: &mut Dfa, from: u32, action: usize) -> u32 {
        if let Some(id) = dfa.next[from as usize][action] {
            return id;
        }
        let mut out = StateSet::empty(self.enabled.len());
        for s in dfa.sets[from as usize].iter() {
            out.union_with(&self.post[s][action]);
        }
        let id = self.intern(dfa, out);
        dfa.next[from as usize][action] = Some(id);
        id
    }

    /// Explores the product of the partial candidate with the guide. Returns
    /// the per-state mask of actions still allowed, or `None` when the
    /// candidate already leaves the trace language.
    fn allowed(&self, adjacency: &[Vec<Edge>], states: usize) -> Option<Vec<u64>> {
        let mut dfa = self.dfa.borrow_mut();
        let mut allowed = vec![u64::MAX; states];
        let mut seen: Vec<Vec<u32>> = vec![Vec::new(); states];
        let mut queue = VecDeque::from([(0usize, 0u32)]);
        seen[0].push(0);
        while let Some((state, set)) = queue.pop_front() {
            let enabled = dfa.enabled[set as usize];
            allowed[state] &= enabled;
            for edge in &adjacency[state] {
                let (action, target) = (edge.action.0, edge.target.0);
                if enabled >> action & 1 == 0 {
                    return None;
                }
                let next = self.step(&mut dfa, set, action);
                if !seen[target].contains(&next) {
                    seen[target].push(next);
                    queue.push_back((target, next));
                }
            }
        }
        Some(allowed)
    }
}

/// Depth-first generator of reachable LTS in breadth-first numbering.
struct Search<'a> {
    alphabet: &'a [String],
    max_states: usize,
    guide: Option<Guide>,
    node_budget: u64,
    nodes: u64,
    adjacency: Vec<Vec<Edge>>,
}

/// A complete candidate produced by [`Search`], borrowed from its state.
struct Candidate<'a> {
    successors: &'a [Vec<Edge>],
    alphabet: &'a [String],
}

impl Candidate<'_> {
    fn side(&self) -> Side<'_> {
        Side {
            successors: self.successors,
            initial: StateId(0),
        }
    }

    fn to_lts(&self) -> Lts {
        let transitions = self
            .successors
            .iter()
            .enumerate()
            .flat_map(|(s, edges)| {
                edges
                    .iter()
                    .map(move |e| ((StateId(s), e.action, e.target), Modality::Necessary))
            })
            .collect();
        let system = ModalSystem::assemble(
            "candidate".to_string(),
            (0..self.successors.len()).map(|s| format!("q{s}")).collect(),
            self.alphabet.to_vec(),
            StateId(0),
            transitions,
        );
        Lts::try_from(system).expect("only necessary transitions")
    }
}

/// A system that candidates are checked against, with the action
/// translation computed once.
struct Prepared<'a> {
    system: &'a ModalSystem,
    maps: ActionMaps,
    kind: RefinementKind,
}

impl<'a> Prepared<'a> {
    fn new(alphabet: &[String], system: &'a ModalSystem, kind: RefinementKind) -> Self {
        Prepared {
            system,
            maps: ActionMaps::between(alphabet, system.alphabet()),
            kind,
        }
    }

    fn accepts(&self, candidate: &Candidate<'_>) -> bool {
        decide(candidate.side(), Side::of(self.system), &self.maps, self.kind)
    }
}

type Visit<'v> = dyn FnMut(&Candidate<'_>) -> Result<ControlFlow<()>, EnumError> + 'v;

impl<'a> Search<'a> {
    fn new(
        alphabet: &'a [String],
        max_states: usize,
        guide: Option<&ModalSystem>,
        node_budget: u64,
    ) -> Result<Self, EnumError> {
        if max_states == 0 {
            return Err(EnumError::ZeroStates);
        }
        if alphabet.len() > 64 {
            return Err(EnumError::AlphabetTooLarge);
        }
        Ok(Search {
            alphabet,
            max_states,
            guide: guide.map(|g| Guide::new(g, alphabet)),
            node_budget,
            nodes: 0,
            adjacency: vec![Vec::new(); max_states],
        })
    }

    fn run(&mut self, visit: &mut Visit<'_>) -> Result<(), EnumError> {
        let allowed = self
            .guide
            .as_ref()
            .map(|g| g.allowed(&self.adjacency, 1).expect("no transitions yet"));
        self.expand(0, 1, allowed.as_deref(), visit).map(|_| ())
    }

    /// Chooses the outgoing transitions of `state`; states below
    /// `discovered` exist, the others are still unused.
    /// `masks` holds the actions the guide still allows per state.
    fn expand(
        &mut self,
        state: usize,
        discovered: usize,
        masks: Option<&[u64]>,
        visit: &mut Visit<'_>,
    ) -> Result<ControlFlow<()>, EnumError> {
        if state == discovered {
            return visit(&Candidate {
                successors: &self.adjacency[..discovered],
                alphabet: self.alphabet,
            });
        }
        let allowed = masks.map_or(u64::MAX, |m| m[state]);
        let positions: Vec<(usize, usize)> = (0..self.alphabet.len())
            .filter(|a| allowed >> a & 1 == 1)
            .flat_map(|a| (0..self.max_states).map(move |t| (a, t)))
            .collect();
        let mut chosen = Vec::new();
        self.choose(state, &positions, 0, discovered, &mut chosen, visit)
    }

    fn choose(
        &mut self,
        state: usize,
        positions: &[(usize, usize)],
        index: usize,
        fresh: usize,
        chosen: &mut Vec<Edge>,
        visit: &mut Visit<'_>,
    ) -> Result<ControlFlow<()>, EnumError> {
        if index == positions.len() {
            self.nodes += 1;
            if self.nodes > self.node_budget {
                return Err(EnumError::SearchNodes(self.node_budget));
            }
            self.adjacency[state] = chosen.clone();
            let masks = match &self.guide {
                None => None,
                Some(guide) => match guide.allowed(&self.adjacency, fresh) {
                    Some(masks) => Some(masks),
                    None => {
                        self.adjacency[state].clear();
                        return Ok(ControlFlow::Continue(()));
                    }
                },
            };
            let flow = self.expand(state + 1, fresh, masks.as_deref(), visit)?;
            self.adjacency[state].clear();
            return Ok(flow);
        }
        if self
            .choose(state, positions, index + 1, fresh, chosen, visit)?
            .is_break()
        {
            return Ok(ControlFlow::Break(()));
        }
        // New states are introduced in increasing order of first use.
        let (action, target) = positions[index];
        if target <= fresh && target < self.max_states {
            chosen.push(Edge {
                action: ActionId(action),
                target: StateId(target),
                modality: Modality::Necessary,
            });
            let next_fresh = if target == fresh { fresh + 1 } else { fresh };
            let flow = self.choose(state, positions, index + 1, next_fresh, chosen, visit)?;
            chosen.pop();
            return Ok(flow);
        }
        Ok(ControlFlow::Continue(()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_system;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn tiny_enumerations() {
        assert_eq!(enumerate_lts(&labels(&["a"]), 1, Budget::default()).unwrap().len(), 2);
        assert_eq!(enumerate_lts(&[], 3, Budget::default()).unwrap().len(), 1);
        assert!(matches!(
            enumerate_lts(&labels(&["a", "b"]), 4, Budget::default()),
            Err(EnumError::TransitionBits { bits: 32, .. })
        ));
        assert_eq!(enumerate_lts(&[], 0, Budget::default()), Err(EnumError::ZeroStates));
    }

    #[test]
    fn every_enumerated_lts_is_reachable_and_small() {
        for lts in enumerate_lts(&labels(&["a", "b"]), 2, Budget::default()).unwrap() {
            assert!(lts.state_count() <= 2);
            assert!(lts.reachable().iter().all(|&r| r));
        }
    }

    #[test]
    fn lts_spec_has_itself_as_only_subset_implementation() {
        let spec = parse_system("initial p\nmust p a q\nmust q b p\n").unwrap();
        for kind in [RefinementKind::Modal, RefinementKind::Nmts] {
            let set = subset_implementations(&spec, EnumerationConfig::new(kind, Strategy::Subset, 1)).unwrap();
            assert_eq!(set.len(), 1);
            assert_eq!(set.candidates, 1);
        }
    }

    #[test]
    fn budgets_are_enforced() {
        let mut text = String::from("initial p\n");
        for i in 0..21 {
            text.push_str(&format!("opt p a q{i}\n"));
        }
        let spec = parse_system(&text).unwrap();
        let config = EnumerationConfig::new(RefinementKind::Modal, Strategy::Subset, 3);
        assert!(matches!(
            subset_implementations(&spec, config),
            Err(EnumError::OptionalTransitions { count: 21, .. })
        ));

        let loops = parse_system("initial p\nopt p a p\nopt p b p\nopt p c p\n").unwrap();
        let tight = EnumerationConfig::new(RefinementKind::Modal, Strategy::Exhaustive, 3).with_budget(Budget {
            search_nodes: 10,
            ..Budget::default()
        });
        assert_eq!(implementations_upto(&loops, tight), Err(EnumError::SearchNodes(10)));
    }

    #[test]
    fn guided_search_matches_filtering_the_full_enumeration() {
        let spec = parse_system("initial p\nopt p a q\nmust q b p\nopt q a q\n").unwrap();
        for kind in [RefinementKind::Modal, RefinementKind::Nmts] {
            let guided = implementations_upto(&spec, EnumerationConfig::new(kind, Strategy::Exhaustive, 3)).unwrap();
            let brute: BTreeSet<_> = enumerate_lts(spec.alphabet(), 3, Budget::default())
                .unwrap()
                .into_iter()
                .filter(|lts| refines(lts, &spec, kind))
                .map(|lts| canonical_key(&lts).unwrap())
                .collect();
            assert_eq!(guided.keys().cloned().collect::<BTreeSet<_>>(), brute);
        }
    }
}
