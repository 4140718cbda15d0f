//! Modal refinement, NMTS membership and NMTS refinement.
//!
//! Both refinement relations are decided as greatest fixpoints: start from
//! every state pair and delete pairs that violate a clause with respect to
//! the surviving pairs until nothing changes. All clauses are monotone in the
//! relation, so the survivors form the largest witnessing relation and the
//! verdict is whether the initial pair survives.
//!
//! Every decision comes with a [`Certificate`]: the fixpoint relation, and on
//! failure a trace of challenges from the initial pair down to a pair that
//! has no admissible answer at all.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coreach::{coreachable, related_states, CoreachRelation, Word};
use crate::model::{ActionId, Edge, ModalSystem, Modality, StateId, Transition};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RefinementKind {
    Modal,
    Nmts,
}

impl fmt::Display for RefinementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefinementKind::Modal => "modal",
            RefinementKind::Nmts => "nmts",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationKind {
    Modal,
    Nmts,
    Coreach,
}

impl From<RefinementKind> for RelationKind {
    fn from(kind: RefinementKind) -> Self {
        match kind {
            RefinementKind::Modal => RelationKind::Modal,
            RefinementKind::Nmts => RelationKind::Nmts,
        }
    }
}

/// A set of (left state, right state) pairs between two systems.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateRelation {
    pub kind: RelationKind,
    pairs: BTreeSet<(StateId, StateId)>,
}

impl StateRelation {
    pub fn new(kind: RelationKind) -> Self {
        StateRelation {
            kind,
            pairs: BTreeSet::new(),
        }
    }

    pub fn from_pairs(kind: RelationKind, pairs: impl IntoIterator<Item = (StateId, StateId)>) -> Self {
        StateRelation {
            kind,
            pairs: pairs.into_iter().collect(),
        }
    }

    /// Resolves state names against the two systems.
    pub fn from_names(
        left: &ModalSystem,
        right: &ModalSystem,
        kind: RelationKind,
        pairs: &[(String, String)],
    ) -> Result<Self, RefineError> {
        let lookup = |system: &ModalSystem, name: &str| {
            system.state_id(name).ok_or_else(|| RefineError::UnknownState {
                system: system.name().to_string(),
                state: name.to_string(),
            })
        };
        let pairs = pairs
            .iter()
            .map(|(l, r)| Ok((lookup(left, l)?, lookup(right, r)?)))
            .collect::<Result<_, RefineError>>()?;
        Ok(StateRelation { kind, pairs })
    }

    pub fn identity(system: &ModalSystem, kind: RelationKind) -> Self {
        StateRelation::from_pairs(kind, system.state_ids().map(|s| (s, s)))
    }

    pub fn contains(&self, left: StateId, right: StateId) -> bool {
        self.pairs.contains(&(left, right))
    }

    pub fn insert(&mut self, left: StateId, right: StateId) -> bool {
        self.pairs.insert((left, right))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn is_subset(&self, other: &StateRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    pub fn to_names(&self, left: &ModalSystem, right: &ModalSystem) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|&(l, r)| (left.state_name(l).to_string(), right.state_name(r).to_string()))
            .collect()
    }
}

/// Clause identifiers, ordered as they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Clause {
    /// The relation must contain the pair of initial states.
    #[serde(rename = "initial")]
    InitialPair,
    /// Necessary transitions on the right are answered by necessary ones on the left.
    #[serde(rename = "modal.must")]
    ModalMust,
    /// Every transition on the left is answered on the right.
    #[serde(rename = "modal.may")]
    ModalMay,
    /// Word-related states never mix modalities on an action.
    #[serde(rename = "nmts.coherence")]
    Coherence,
    #[serde(rename = "nmts.must")]
    NmtsMust,
    /// Optional transitions on the right are either answered on the left or
    /// uniformly disabled across every word-related left state.
    #[serde(rename = "nmts.optional")]
    NmtsOptional,
    #[serde(rename = "nmts.may")]
    NmtsMay,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::InitialPair => "initial",
            Clause::ModalMust => "modal.must",
            Clause::ModalMay => "modal.may",
            Clause::Coherence => "nmts.coherence",
            Clause::NmtsMust => "nmts.must",
            Clause::NmtsOptional => "nmts.optional",
            Clause::NmtsMay => "nmts.may",
        })
    }
}

/// A transition spelled out with names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRef {
    pub source: String,
    pub action: String,
    pub target: String,
    pub modality: Modality,
}

impl TransitionRef {
    pub fn of(system: &ModalSystem, t: Transition) -> Self {
        TransitionRef {
            source: system.state_name(t.source).to_string(),
            action: system.action_name(t.action).to_string(),
            target: system.state_name(t.target).to_string(),
            modality: t.modality,
        }
    }
}

impl fmt::Display for TransitionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} --{}--> {} ({})",
            self.source,
            self.action,
            self.target,
            self.modality.keyword()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClauseViolation {
    pub left: String,
    pub right: String,
    pub clause: Clause,
    /// The transition that could not be answered.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub transition: Option<TransitionRef>,
    /// For `nmts.optional`: the word-related left state that enables the action.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub related_state: Option<String>,
    /// For `nmts.optional`: a word reaching both the pair's left state and
    /// `related_state`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Word>,
    pub explanation: String,
}

/// One challenge on the failure trace. `response` leads to the pair of the
/// next step; the last step has no admissible response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub left: String,
    pub right: String,
    pub clause: Clause,
    pub challenge: TransitionRef,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub response: Option<TransitionRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: RefinementKind,
    pub left_system: String,
    pub right_system: String,
    pub verdict: Verdict,
    /// The greatest fixpoint relation. On `holds` it contains the initial pair
    /// and witnesses the refinement.
    pub relation: Vec<(String, String)>,
    /// On `fails`, the violated clause at every pair of `trace`, in order.
    pub violations: Vec<ClauseViolation>,
    pub trace: Vec<TraceStep>,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    /// The violation at the end of the failure trace.
    pub fn root_cause(&self) -> Option<&ClauseViolation> {
        self.violations.last()
    }
}

/// Two word-related states that disagree on the modality of an action.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceViolation {
    /// The state with the necessary transition.
    pub state: String,
    /// The state with the optional transition.
    pub other: String,
    pub action: String,
    pub witness: Word,
}

impl fmt::Display for CoherenceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} has a necessary {}-transition, {} an optional one, both reached by \"{}\"",
            self.state,
            self.action,
            self.other,
            self.witness.join(" ")
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RefineError {
    #[error("system `{system}` is not an NMTS: {violation}")]
    NotNmts {
        system: String,
        violation: CoherenceViolation,
    },
    #[error("state `{state}` does not belong to system `{system}`")]
    UnknownState { system: String, state: String },
}

/// Checks that word-related states never mix modalities on a common action.
/// Reports the first offending (state, other state, action) in state order.
pub fn is_nmts(system: &ModalSystem) -> Result<(), CoherenceViolation> {
    let related = related_states(system);
    for entry in related.entries() {
        for edge in system.successors(entry.left) {
            if edge.modality != Modality::Necessary {
                continue;
            }
            let clash = system
                .successors(entry.right)
                .iter()
                .any(|e| e.action == edge.action && e.modality == Modality::Optional);
            if clash {
                return Err(CoherenceViolation {
                    state: system.state_name(entry.left).to_string(),
                    other: system.state_name(entry.right).to_string(),
                    action: system.action_name(edge.action).to_string(),
                    witness: entry.witness,
                });
            }
        }
    }
    Ok(())
}

fn ensure_nmts(system: &ModalSystem) -> Result<(), RefineError> {
    is_nmts(system).map_err(|violation| RefineError::NotNmts {
        system: system.name().to_string(),
        violation,
    })
}

/// A clause failure found at one pair.
#[derive(Clone, Debug)]
struct Failure {
    clause: Clause,
    /// The challenged transition; it belongs to the right system except for
    /// the `may` clauses, where it belongs to the left one.
    challenge: Transition,
    /// Every structurally possible answer and the pair it would lead to.
    answers: Vec<(Transition, (StateId, StateId))>,
    related: Option<(StateId, Word)>,
}

struct NmtsContext {
    cross: CoreachRelation,
    left_related: CoreachRelation,
}

struct Checker<'a> {
    left: &'a ModalSystem,
    right: &'a ModalSystem,
    kind: RefinementKind,
    to_right: Vec<Option<ActionId>>,
    to_left: Vec<Option<ActionId>>,
    nmts: Option<NmtsContext>,
}

impl<'a> Checker<'a> {
    fn new(left: &'a ModalSystem, right: &'a ModalSystem, kind: RefinementKind) -> Self {
        let to_right = left.alphabet().iter().map(|a| right.action_id(a)).collect();
        let to_left = right.alphabet().iter().map(|a| left.action_id(a)).collect();
        let nmts = (kind == RefinementKind::Nmts).then(|| NmtsContext {
            cross: coreachable(left, right),
            left_related: related_states(left),
        });
        Checker {
            left,
            right,
            kind,
            to_right,
            to_left,
            nmts,
        }
    }

    fn pair_index(&self, p: StateId, q: StateId) -> usize {
        p.0 * self.right.state_count() + q.0
    }

    /// Clause failures at (p, q) with respect to `rel`, in clause order.
    fn failures(
        &self,
        p: StateId,
        q: StateId,
        rel: &dyn Fn(StateId, StateId) -> bool,
        first_only: bool,
    ) -> Vec<Failure> {
        let mut found = Vec::new();
        let (must_clause, may_clause) = match self.kind {
            RefinementKind::Modal => (Clause::ModalMust, Clause::ModalMay),
            RefinementKind::Nmts => (Clause::NmtsMust, Clause::NmtsMay),
        };

        for edge in self.right.successors(q) {
            if edge.modality != Modality::Necessary {
                continue;
            }
            let answers = self.left_answers(p, self.to_left[edge.action.0], edge.target, true);
            if !answers.iter().any(|&(_, (l, r))| rel(l, r)) {
                found.push(Failure {
                    clause: must_clause,
                    challenge: transition(q, edge),
                    answers,
                    related: None,
                });
                if first_only {
                    return found;
                }
            }
        }

        if let Some(nmts) = &self.nmts {
            for edge in self.right.successors(q) {
                if edge.modality != Modality::Optional || !nmts.cross.contains(p, q) {
                    continue;
                }
                let action = self.to_left[edge.action.0];
                let enabling = action.and_then(|a| {
                    nmts.left_related
                        .partners(p)
                        .iter()
                        .copied()
                        .find(|&other| self.left.enables(other, a))
                });
                let Some(other) = enabling else {
                    continue;
                };
                let answers = self.left_answers(p, action, edge.target, false);
                if !answers.iter().any(|&(_, (l, r))| rel(l, r)) {
                    let word = nmts.left_related.witness(p, other).expect("partner").to_vec();
                    found.push(Failure {
                        clause: Clause::NmtsOptional,
                        challenge: transition(q, edge),
                        answers,
                        related: Some((other, word)),
                    });
                    if first_only {
                        return found;
                    }
                }
            }
        }

        for edge in self.left.successors(p) {
            let answers: Vec<_> = match self.to_right[edge.action.0] {
                None => Vec::new(),
                Some(action) => self
                    .right
                    .successors(q)
                    .iter()
                    .filter(|e| e.action == action)
                    .map(|e| (transition(q, e), (edge.target, e.target)))
                    .collect(),
            };
            if !answers.iter().any(|&(_, (l, r))| rel(l, r)) {
                found.push(Failure {
                    clause: may_clause,
                    challenge: transition(p, edge),
                    answers,
                    related: None,
                });
                if first_only {
                    return found;
                }
            }
        }
        found
    }

    fn left_answers(
        &self,
        p: StateId,
        action: Option<ActionId>,
        right_target: StateId,
        necessary_only: bool,
    ) -> Vec<(Transition, (StateId, StateId))> {
        let Some(action) = action else {
            return Vec::new();
        };
        self.left
            .successors(p)
            .iter()
            .filter(|e| e.action == action && (!necessary_only || e.modality == Modality::Necessary))
            .map(|e| (transition(p, e), (e.target, right_target)))
            .collect()
    }

    fn violation(&self, p: StateId, q: StateId, failure: &Failure) -> ClauseViolation {
        let (left, right) = (self.left, self.right);
        let lname = left.state_name(p);
        let rname = right.state_name(q);
        let challenged_left = matches!(failure.clause, Clause::ModalMay | Clause::NmtsMay);
        let challenge = if challenged_left {
            TransitionRef::of(left, failure.challenge)
        } else {
            TransitionRef::of(right, failure.challenge)
        };
        let action = &challenge.action;
        let explanation = match failure.clause {
            Clause::ModalMust | Clause::NmtsMust => {
                if left.action_id(action).is_none() {
                    format!(
                        "{challenge} is necessary but `{action}` is not in the alphabet of {}",
                        left.name()
                    )
                } else if failure.answers.is_empty() {
                    format!("{challenge} is necessary but {lname} has no necessary {action}-transition")
                } else {
                    format!("{challenge} is necessary but no necessary {action}-transition of {lname} leads to a related state")
                }
            }
            Clause::ModalMay | Clause::NmtsMay => {
                if right.action_id(action).is_none() {
                    format!(
                        "{challenge} uses `{action}`, which is not in the alphabet of {}",
                        right.name()
                    )
                } else if failure.answers.is_empty() {
                    format!("{challenge} is not allowed: {rname} has no {action}-transition")
                } else {
                    format!("{challenge} is not allowed: no {action}-transition of {rname} leads to a related state")
                }
            }
            Clause::NmtsOptional => {
                let (other, word) = failure
                    .related
                    .as_ref()
                    .expect("optional failures carry a related state");
                let reach = if failure.answers.is_empty() {
                    format!("{lname} has no {action}-transition")
                } else {
                    format!("no {action}-transition of {lname} leads to a related state")
                };
                format!(
                    "{challenge} is optional and {reach}, but it cannot be disabled: {} also follows \"{}\" and enables {action}",
                    left.state_name(*other),
                    word.join(" ")
                )
            }
            Clause::InitialPair | Clause::Coherence => unreachable!("not a pair clause"),
        };
        ClauseViolation {
            left: lname.to_string(),
            right: rname.to_string(),
            clause: failure.clause,
            transition: Some(challenge),
            related_state: failure.related.as_ref().map(|(s, _)| left.state_name(*s).to_string()),
            witness: failure.related.as_ref().map(|(_, w)| w.clone()),
            explanation,
        }
    }
}

fn transition(source: StateId, edge: &crate::model::Edge) -> Transition {
    Transition {
        source,
        action: edge.action,
        target: edge.target,
        modality: edge.modality,
    }
}

struct Fixpoint {
    alive: Vec<bool>,
    /// Round in which each dead pair was removed, with the reason.
    removed: HashMap<(StateId, StateId), (u32, Failure)>,
}

fn greatest_fixpoint(checker: &Checker<'_>, record: bool) -> Fixpoint {
    let (left, right) = (checker.left, checker.right);
    let mut alive = vec![true; left.state_count() * right.state_count()];
    let mut removed = HashMap::new();
    let mut round = 0;
    loop {
        round += 1;
        let snapshot = alive.clone();
        let rel = |l: StateId, r: StateId| snapshot[checker.pair_index(l, r)];
        let mut changed = false;
        for p in left.state_ids() {
            for q in right.state_ids() {
                let index = checker.pair_index(p, q);
                if !snapshot[index] {
                    continue;
                }
                if let Some(failure) = checker.failures(p, q, &rel, true).into_iter().next() {
                    alive[index] = false;
                    changed = true;
                    if record {
                        removed.insert((p, q), (round, failure));
                    }
                }
            }
        }
        if !changed {
            return Fixpoint { alive, removed };
        }
    }
}

fn certificate(checker: &Checker<'_>) -> Certificate {
    let (left, right) = (checker.left, checker.right);
    let fixpoint = greatest_fixpoint(checker, true);
    let relation = StateRelation::from_pairs(
        checker.kind.into(),
        left.state_ids()
            .flat_map(|p| right.state_ids().map(move |q| (p, q)))
            .filter(|&(p, q)| fixpoint.alive[checker.pair_index(p, q)]),
    );
    let start = (left.initial(), right.initial());
    let holds = relation.contains(start.0, start.1);

    let mut violations = Vec::new();
    let mut trace = Vec::new();
    if !holds {
        let mut pair = start;
        loop {
            let (_, failure) = &fixpoint.removed[&pair];
            let violation = checker.violation(pair.0, pair.1, failure);
            // Continue with the answer whose target pair died first.
            let next = failure
                .answers
                .iter()
                .min_by_key(|(_, target)| (fixpoint.removed[target].0, *target));
            let challenged_left = matches!(failure.clause, Clause::ModalMay | Clause::NmtsMay);
            trace.push(TraceStep {
                left: violation.left.clone(),
                right: violation.right.clone(),
                clause: failure.clause,
                challenge: violation.transition.clone().expect("pair clauses name a transition"),
                response: next.map(|(t, _)| {
                    if challenged_left {
                        TransitionRef::of(right, *t)
                    } else {
                        TransitionRef::of(left, *t)
                    }
                }),
            });
            violations.push(violation);
            match next {
                Some(&(_, target)) => pair = target,
                None => break,
            }
        }
    }

    Certificate {
        kind: checker.kind,
        left_system: left.name().to_string(),
        right_system: right.name().to_string(),
        verdict: if holds { Verdict::Holds } else { Verdict::Fails },
        relation: relation.to_names(left, right),
        violations,
        trace,
    }
}

/// Decides `left ≼m right`.
pub fn modal_refines(left: &ModalSystem, right: &ModalSystem) -> Certificate {
    certificate(&Checker::new(left, right, RefinementKind::Modal))
}

/// Decides `left ≼n right`. Unless `allow_non_nmts` is set, both systems
/// must be NMTS.
pub fn nmts_refines(left: &ModalSystem, right: &ModalSystem, allow_non_nmts: bool) -> Result<Certificate, RefineError> {
    if !allow_non_nmts {
        ensure_nmts(left)?;
        ensure_nmts(right)?;
    }
    Ok(certificate(&Checker::new(left, right, RefinementKind::Nmts)))
}

/// Dispatches on `kind`; `allow_non_nmts` only matters for NMTS refinement.
pub fn refines_with_certificate(
    left: &ModalSystem,
    right: &ModalSystem,
    kind: RefinementKind,
    allow_non_nmts: bool,
) -> Result<Certificate, RefineError> {
    match kind {
        RefinementKind::Modal => Ok(modal_refines(left, right)),
        RefinementKind::Nmts => nmts_refines(left, right, allow_non_nmts),
    }
}

/// Verdict only, without building a certificate. No NMTS precondition is
/// checked here.
pub fn refines(left: &ModalSystem, right: &ModalSystem, kind: RefinementKind) -> bool {
    let maps = ActionMaps::between(left.alphabet(), right.alphabet());
    decide(Side::of(left), Side::of(right), &maps, kind)
}

/// Borrowed transition structure for the allocation-light decision path.
#[derive(Clone, Copy)]
pub(crate) struct Side<'a> {
    pub successors: &'a [Vec<Edge>],
    pub initial: StateId,
}

impl<'a> Side<'a> {
    pub(crate) fn of(system: &'a ModalSystem) -> Self {
        Side {
            successors: system.successor_table(),
            initial: system.initial(),
        }
    }
}

/// Action translation between two alphabets, by name.
pub(crate) struct ActionMaps {
    to_right: Vec<Option<ActionId>>,
    to_left: Vec<Option<ActionId>>,
}

impl ActionMaps {
    pub(crate) fn between(left: &[String], right: &[String]) -> Self {
        let map = |from: &[String], to: &[String]| -> Vec<Option<ActionId>> {
            from.iter()
                .map(|a| to.iter().position(|b| a == b).map(ActionId))
                .collect()
        };
        ActionMaps {
            to_right: map(left, right),
            to_left: map(right, left),
        }
    }
}

/// Pairs reachable from the initial pair by a common word, as a flat table
/// indexed by `p * |right| + q`.
fn common_word_pairs(left: Side<'_>, right: Side<'_>, to_right: &[Option<ActionId>]) -> Vec<bool> {
    let width = right.successors.len();
    let mut seen = vec![false; left.successors.len() * width];
    seen[left.initial.0 * width + right.initial.0] = true;
    let mut stack = vec![(left.initial, right.initial)];
    while let Some((p, q)) = stack.pop() {
        for edge in &left.successors[p.0] {
            let Some(action) = to_right[edge.action.0] else {
                continue;
            };
            for other in right.successors[q.0].iter().filter(|e| e.action == action) {
                let index = edge.target.0 * width + other.target.0;
                if !seen[index] {
                    seen[index] = true;
                    stack.push((edge.target, other.target));
                }
            }
        }
    }
    seen
}

/// Greatest fixpoint without certificates. Agrees with the certificate
/// path; a unit test compares the two.
pub(crate) fn decide(left: Side<'_>, right: Side<'_>, maps: &ActionMaps, kind: RefinementKind) -> bool {
    let (nl, nr) = (left.successors.len(), right.successors.len());
    let (to_right, to_left) = (&maps.to_right, &maps.to_left);
    // For NMTS refinement: whether an optional challenge at (p, q) with the
    // given left action has to be answered.
    let constrained = (kind == RefinementKind::Nmts).then(|| {
        let cross = common_word_pairs(left, right, to_right);
        let identity: Vec<Option<ActionId>> = (0..to_right.len()).map(|a| Some(ActionId(a))).collect();
        let related = common_word_pairs(left, left, &identity);
        let actions = to_right.len();
        let mut enabled_near = vec![false; nl * actions];
        for p in 0..nl {
            for other in (0..nl).filter(|&o| related[p * nl + o]) {
                for edge in &left.successors[other] {
                    enabled_near[p * actions + edge.action.0] = true;
                }
            }
        }
        move |p: StateId, q: StateId, action: Option<ActionId>| {
            cross[p.0 * nr + q.0] && action.is_some_and(|a| enabled_near[p.0 * actions + a.0])
        }
    });
    let mut alive = vec![true; nl * nr];
    let holds = |alive: &[bool], p: usize, q: usize| {
        for edge in &right.successors[q] {
            let action = to_left[edge.action.0];
            let necessary = edge.modality == Modality::Necessary;
            let needed = necessary || constrained.as_ref().is_some_and(|c| c(StateId(p), StateId(q), action));
            if needed {
                let answered = action.is_some_and(|a| {
                    left.successors[p].iter().any(|e| {
                        e.action == a
                            && (!necessary || e.modality == Modality::Necessary)
                            && alive[e.target.0 * nr + edge.target.0]
                    })
                });
                if !answered {
                    return false;
                }
            }
        }
        left.successors[p].iter().all(|edge| {
            to_right[edge.action.0].is_some_and(|a| {
                right.successors[q]
                    .iter()
                    .any(|e| e.action == a && alive[edge.target.0 * nr + e.target.0])
            })
        })
    };
    loop {
        let mut changed = false;
        for p in 0..nl {
            for q in 0..nr {
                let index = p * nr + q;
                if alive[index] && !holds(&alive, p, q) {
                    alive[index] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return alive[left.initial.0 * nr + right.initial.0];
        }
    }
}

/// Checks a given relation clause by clause. Matching answers must land in
/// `relation` itself. Returns every violation, or an empty list when the
/// relation witnesses the refinement.
pub fn verify_relation(
    left: &ModalSystem,
    right: &ModalSystem,
    relation: &StateRelation,
    kind: RefinementKind,
) -> Result<Vec<ClauseViolation>, RefineError> {
    for (p, q) in relation.pairs() {
        if p.0 >= left.state_count() {
            return Err(RefineError::UnknownState {
                system: left.name().to_string(),
                state: format!("#{}", p.0),
            });
        }
        if q.0 >= right.state_count() {
            return Err(RefineError::UnknownState {
                system: right.name().to_string(),
                state: format!("#{}", q.0),
            });
        }
    }
    let checker = Checker::new(left, right, kind);
    let rel = |l: StateId, r: StateId| relation.contains(l, r);
    let mut violations = Vec::new();
    if !relation.contains(left.initial(), right.initial()) {
        violations.push(ClauseViolation {
            left: left.state_name(left.initial()).to_string(),
            right: right.state_name(right.initial()).to_string(),
            clause: Clause::InitialPair,
            transition: None,
            related_state: None,
            witness: None,
            explanation: "the relation does not contain the pair of initial states".to_string(),
        });
    }
    for (p, q) in relation.pairs() {
        for failure in checker.failures(p, q, &rel, false) {
            violations.push(checker.violation(p, q, &failure));
        }
    }
    Ok(violations)
}

/// Whether `violation` is a genuine failure with respect to `relation`:
/// re-evaluating its clause at its pair, for its transition, fails.
pub fn recheck_violation(
    left: &ModalSystem,
    right: &ModalSystem,
    relation: &StateRelation,
    kind: RefinementKind,
    violation: &ClauseViolation,
) -> bool {
    let (Some(p), Some(q)) = (left.state_id(&violation.left), right.state_id(&violation.right)) else {
        return false;
    };
    if violation.clause == Clause::InitialPair {
        return (p, q) == (left.initial(), right.initial()) && !relation.contains(p, q);
    }
    let checker = Checker::new(left, right, kind);
    let rel = |l: StateId, r: StateId| relation.contains(l, r);
    checker
        .failures(p, q, &rel, false)
        .iter()
        .map(|failure| checker.violation(p, q, failure))
        .any(|v| v.clause == violation.clause && v.transition == violation.transition)
}

/// Re-validates a certificate against the two systems it talks about.
pub fn check_certificate(left: &ModalSystem, right: &ModalSystem, cert: &Certificate) -> bool {
    let Ok(relation) = StateRelation::from_names(left, right, cert.kind.into(), &cert.relation) else {
        return false;
    };
    match cert.verdict {
        Verdict::Holds => {
            relation.contains(left.initial(), right.initial())
                && matches!(verify_relation(left, right, &relation, cert.kind), Ok(v) if v.is_empty())
        }
        Verdict::Fails => {
            let starts_at_initial = cert.trace.first().is_some_and(|step| {
                step.left == left.state_name(left.initial()) && step.right == right.state_name(right.initial())
            });
            starts_at_initial
                && !relation.contains(left.initial(), right.initial())
                && cert.trace.len() == cert.violations.len()
                && cert.trace.last().is_some_and(|step| step.response.is_none())
                && cert
                    .violations
                    .iter()
                    .all(|v| recheck_violation(left, right, &relation, cert.kind, v))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_system;

    fn sys(text: &str) -> ModalSystem {
        parse_system(text).unwrap()
    }

    #[test]
    fn missing_alphabet_entry_fails_must_clause() {
        let left = sys("initial p\n");
        let right = sys("initial q\nmust q a q\n");
        let cert = modal_refines(&left, &right);
        assert_eq!(cert.verdict, Verdict::Fails);
        assert_eq!(cert.violations[0].clause, Clause::ModalMust);
        assert!(cert.violations[0].explanation.contains("not in the alphabet"));
        assert!(check_certificate(&left, &right, &cert));
    }

    #[test]
    fn failure_trace_follows_answers() {
        // left can do a then b; right only allows a.
        let left = sys("initial p\nmust p a p1\nmust p1 b p2\n");
        let right = sys("initial q\nopt q a q1\nalphabet b\n");
        let cert = modal_refines(&left, &right);
        assert_eq!(cert.verdict, Verdict::Fails);
        assert_eq!(cert.trace.len(), 2);
        assert_eq!(cert.trace[0].response.as_ref().unwrap().target, "q1");
        assert!(cert.trace[1].response.is_none());
        assert_eq!(cert.root_cause().unwrap().left, "p1");
        assert!(check_certificate(&left, &right, &cert));
    }

    #[test]
    fn empty_relation_misses_initial_pair() {
        let x = sys("initial p\nopt p a p\n");
        let empty = StateRelation::new(RelationKind::Modal);
        let violations = verify_relation(&x, &x, &empty, RefinementKind::Modal).unwrap();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].clause, Clause::InitialPair);
    }

    #[test]
    fn unknown_states_in_relations_are_errors() {
        let x = sys("initial p\n");
        let err = StateRelation::from_names(&x, &x, RelationKind::Modal, &[("p".into(), "zz".into())]);
        assert!(matches!(err, Err(RefineError::UnknownState { .. })));
        let bogus = StateRelation::from_pairs(RelationKind::Modal, [(StateId(0), StateId(7))]);
        assert!(verify_relation(&x, &x, &bogus, RefinementKind::Modal).is_err());
    }

    #[test]
    fn non_nmts_inputs_are_rejected_unless_allowed() {
        let s = sys("initial s0\nmust s0 c s1\nmust s0 c s2\nopt s1 a s3\nmust s2 a s4\n");
        let err = nmts_refines(&s, &s, false).unwrap_err();
        assert!(matches!(err, RefineError::NotNmts { .. }));
        assert!(nmts_refines(&s, &s, true).unwrap().holds());
    }

    #[test]
    fn fast_verdict_agrees_with_certificates() {
        use crate::random::{random_mts, RandomSpec};
        let spec = RandomSpec {
            max_states: 4,
            alphabet: vec!["a".into(), "b".into()],
            density: 0.3,
            optional_ratio: 0.5,
        };
        let mut holding = 0;
        for seed in 0..400 {
            let left = random_mts(seed, &spec);
            let right = random_mts(seed + 10_000, &spec);
            for (l, r) in [(&left, &right), (&left, &left)] {
                for kind in [RefinementKind::Modal, RefinementKind::Nmts] {
                    let cert = refines_with_certificate(l, r, kind, true).unwrap();
                    assert_eq!(refines(l, r, kind), cert.holds(), "seed {seed} {kind}");
                    holding += usize::from(cert.holds());
                }
            }
        }
        assert!(holding > 800);
    }
}
