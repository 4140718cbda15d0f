//! Strong bisimulation on LTS: equivalence checking, minimisation and
//! canonical keys that identify an LTS up to bisimilarity.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Lts, ModalSystem, StateId};

/// Tied states beyond this many in one group are not canonicalised by
/// brute-force permutation.
pub const MAX_TIED_GROUP: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("{0} indistinguishable states in one group exceed the canonicalisation limit of {MAX_TIED_GROUP}")]
    Capacity(usize),
}

/// A partition of the states of a system into blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    pub fn block_of(&self, state: StateId) -> usize {
        self.block_of[state.0]
    }

    pub fn block_count(&self) -> usize {
        self.blocks
    }

    pub fn blocks(&self) -> Vec<Vec<StateId>> {
        let mut blocks = vec![Vec::new(); self.blocks];
        for (state, &block) in self.block_of.iter().enumerate() {
            blocks[block].push(StateId(state));
        }
        blocks
    }
}

/// Labelled graph over plain indices, labels resolved to strings.
struct Graph<'a> {
    edges: Vec<Vec<(&'a str, usize)>>,
}

impl<'a> Graph<'a> {
    fn of(systems: &[&'a ModalSystem]) -> (Self, Vec<usize>) {
        let mut edges = Vec::new();
        let mut offsets = Vec::new();
        for system in systems {
            let offset = edges.len();
            offsets.push(offset);
            for state in system.state_ids() {
                edges.push(
                    system
                        .successors(state)
                        .iter()
                        .map(|e| (system.action_name(e.action), offset + e.target.0))
                        .collect(),
                );
            }
        }
        (Graph { edges }, offsets)
    }

    /// Coarsest stable partition, by repeated signature splitting.
    fn partition(&self) -> Vec<usize> {
        let mut block = vec![0usize; self.edges.len()];
        let mut count = 1;
        loop {
            let mut numbering: HashMap<(usize, BTreeSet<(&str, usize)>), usize> = HashMap::new();
            let mut next = Vec::with_capacity(block.len());
            for (state, edges) in self.edges.iter().enumerate() {
                let signature: BTreeSet<_> = edges.iter().map(|&(a, t)| (a, block[t])).collect();
                let fresh = numbering.len();
                next.push(*numbering.entry((block[state], signature)).or_insert(fresh));
            }
            let new_count = numbering.len();
            block = next;
            if new_count == count {
                return block;
            }
            count = new_count;
        }
    }
}

/// Coarsest strong bisimulation of a single system, modality-blind.
pub fn bisimulation_partition(system: &ModalSystem) -> Partition {
    let (graph, _) = Graph::of(&[system]);
    let block_of = graph.partition();
    let blocks = block_of.iter().max().map_or(0, |m| m + 1);
    Partition { block_of, blocks }
}

/// Decides bisimilarity of the initial states. On success, returns the
/// largest bisimulation between the two state sets.
pub fn bisimilar(left: &Lts, right: &Lts) -> Option<Vec<(StateId, StateId)>> {
    let (graph, offsets) = Graph::of(&[left, right]);
    let block = graph.partition();
    let offset = offsets[1];
    if block[left.initial().0] != block[offset + right.initial().0] {
        return None;
    }
    let mut relation = Vec::new();
    for p in left.state_ids() {
        for q in right.state_ids() {
            if block[p.0] == block[offset + q.0] {
                relation.push((p, q));
            }
        }
    }
    Some(relation)
}

pub fn are_bisimilar(left: &Lts, right: &Lts) -> bool {
    bisimilar(left, right).is_some()
}

/// Bisimulation quotient of the reachable part. Each class is named after
/// its first member in state order.
pub fn minimize(lts: &Lts) -> Lts {
    Lts::try_from(quotient(&lts.restrict_to_reachable())).expect("quotient of an LTS is an LTS")
}

fn quotient(system: &ModalSystem) -> ModalSystem {
    let partition = bisimulation_partition(system);
    // Renumber blocks by first member so the quotient keeps state order.
    let mut renumber = vec![None; partition.block_count()];
    let mut states = Vec::new();
    for state in system.state_ids() {
        let block = partition.block_of(state);
        if renumber[block].is_none() {
            renumber[block] = Some(StateId(states.len()));
            states.push(system.state_name(state).to_string());
        }
    }
    let class = |s: StateId| renumber[partition.block_of(s)].expect("every block has a member");
    let transitions = system
        .transitions()
        .map(|t| ((class(t.source), t.action, class(t.target)), t.modality))
        .collect();
    ModalSystem::assemble(
        system.name().to_string(),
        states,
        system.alphabet().to_vec(),
        class(system.initial()),
        transitions,
    )
}

/// Encoding of a minimised, canonically numbered LTS. Equal keys mean
/// bisimilar systems, whatever their state names or declared alphabets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CanonicalKey(String);

impl CanonicalKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl std::fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Canonical key of an LTS up to strong bisimilarity.
///
/// States of the minimised system are coloured by BFS layer, then the
/// colours are refined by the multiset of (action, successor colour) until
/// stable. States still sharing a colour are ordered by trying every
/// permutation and keeping the least encoding.
pub fn canonical_key(lts: &Lts) -> Result<CanonicalKey, BisimError> {
    let min = minimize(lts);
    let n = min.state_count();
    let edges: Vec<Vec<(&str, usize)>> = min
        .state_ids()
        .map(|s| {
            min.successors(s)
                .iter()
                .map(|e| (min.action_name(e.action), e.target.0))
                .collect()
        })
        .collect();

    // BFS layers; every state of the quotient is reachable.
    let mut layer = vec![usize::MAX; n];
    layer[min.initial().0] = 0;
    let mut frontier = vec![min.initial().0];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in frontier {
            for &(_, t) in &edges[s] {
                if layer[t] == usize::MAX {
                    layer[t] = layer[s] + 1;
                    next.push(t);
                }
            }
        }
        frontier = next;
    }

    let mut colour = layer;
    let mut classes = colour.iter().collect::<BTreeSet<_>>().len();
    loop {
        let signatures: Vec<(usize, Vec<(&str, usize)>)> = (0..n)
            .map(|s| {
                let mut sig: Vec<_> = edges[s].iter().map(|&(a, t)| (a, colour[t])).collect();
                sig.sort();
                (colour[s], sig)
            })
            .collect();
        let ranks: BTreeMap<_, usize> = signatures
            .iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(rank, sig)| (sig.clone(), rank))
            .collect();
        colour = signatures.iter().map(|sig| ranks[sig]).collect();
        if ranks.len() == classes {
            break;
        }
        classes = ranks.len();
    }

    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (state, &c) in colour.iter().enumerate() {
        groups.entry(c).or_default().push(state);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();
    if let Some(big) = groups.iter().find(|g| g.len() > MAX_TIED_GROUP) {
        return Err(BisimError::Capacity(big.len()));
    }

    let mut best: Option<String> = None;
    let mut order = Vec::with_capacity(n);
    each_ordering(&groups, 0, &mut order, &mut |order| {
        let encoding = encode(&edges, order);
        if best.as_ref().is_none_or(|b| encoding < *b) {
            best = Some(encoding);
        }
    });
    Ok(CanonicalKey(best.expect("at least one ordering")))
}

/// Calls `visit` with every concatenation of permutations of the groups.
fn each_ordering(groups: &[Vec<usize>], index: usize, order: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if index == groups.len() {
        visit(order);
        return;
    }
    let mut group = groups[index].clone();
    permute(&mut group, 0, &mut |perm| {
        let len = order.len();
        order.extend_from_slice(perm);
        each_ordering(groups, index + 1, order, visit);
        order.truncate(len);
    });
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

fn encode(edges: &[Vec<(&str, usize)>], order: &[usize]) -> String {
    let mut position = vec![0; order.len()];
    for (index, &state) in order.iter().enumerate() {
        position[state] = index;
    }
    let mut lines: Vec<(usize, &str, usize)> = Vec::new();
    for (state, out) in edges.iter().enumerate() {
        for &(action, target) in out {
            lines.push((position[state], action, position[target]));
        }
    }
    lines.sort();
    let mut text = format!("{}", order.len());
    for (source, action, target) in lines {
        text.push_str(&format!(";{source} {action} {target}"));
    }
    text
}
