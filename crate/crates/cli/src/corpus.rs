//! The bundled model corpus and its expected verdicts.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nmts::format::parse_relation;
use nmts::impls::impl_gap;
use nmts::refine::{Clause, CoherenceViolation};
use nmts::{
    are_bisimilar, implementations_upto, is_nmts, parse_system, refines, refines_with_certificate,
    thorough_refines_bounded, verify_relation, EnumerationConfig, Lts, ModalSystem, RefinementKind, StateRelation,
    Strategy, ThoroughVerdict,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "corpus.toml";

macro_rules! bundle {
    ($($file:literal),* $(,)?) => {
        &[$(($file, include_str!(concat!("../corpus/", $file)))),*]
    };
}

/// Every file of the bundled corpus, by file name.
pub const BUNDLED_FILES: &[(&str, &str)] = bundle![
    "corpus.toml",
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
];

pub fn bundled_file(name: &str) -> Option<&'static str> {
    BUNDLED_FILES
        .iter()
        .find(|(file, _)| *file == name)
        .map(|(_, text)| *text)
}

pub fn bundled_manifest() -> &'static str {
    bundled_file(MANIFEST_FILE).expect("the manifest is bundled")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Read off a figure caption or the discussion around it.
    Figure,
    /// Computed by an independent brute-force enumeration and pinned.
    Oracle,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Manifest {
    #[serde(rename = "model", default)]
    pub models: Vec<FileEntry>,
    #[serde(rename = "relation", default)]
    pub relations: Vec<FileEntry>,
    #[serde(rename = "assertion", default)]
    pub assertions: Vec<Assertion>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct FileEntry {
    pub id: String,
    pub file: String,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub claim: String,
    pub provenance: Provenance,
    #[serde(flatten)]
    pub check: Check,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExpectedRootCause {
    pub left: String,
    pub right: String,
    pub clause: Clause,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ExpectedViolation {
    pub state: String,
    pub other: String,
    pub action: String,
    pub witness: Vec<String>,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ChainStep {
    pub kind: RefinementKind,
    pub left: String,
    pub right: String,
    #[serde(default)]
    pub allow_non_nmts: bool,
    pub expect: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "check", rename_all = "kebab-case")]
pub enum Check {
    Refine {
        kind: RefinementKind,
        left: String,
        right: String,
        #[serde(default)]
        allow_non_nmts: bool,
        expect: bool,
        root_cause: Option<ExpectedRootCause>,
    },
    Nmts {
        model: String,
        expect: bool,
        violation: Option<ExpectedViolation>,
    },
    Lts {
        model: String,
        expect: bool,
    },
    VerifyRelation {
        kind: RefinementKind,
        left: String,
        right: String,
        relation: String,
        expect: bool,
    },
    /// `expect = true` means no separating implementation within the bound.
    Thorough {
        kind: RefinementKind,
        strategy: Strategy,
        max_states: usize,
        left: String,
        right: String,
        #[serde(default)]
        allow_non_nmts: bool,
        expect: bool,
        /// A model that must itself separate the two systems.
        witness: Option<String>,
    },
    Implementations {
        kind: RefinementKind,
        strategy: Strategy,
        max_states: usize,
        model: String,
        #[serde(default)]
        allow_non_nmts: bool,
        count: Option<usize>,
        #[serde(default)]
        contains: Vec<String>,
    },
    /// Every member of the gap is re-checked against both refinements.
    Gap {
        strategy: Strategy,
        max_states: usize,
        model: String,
        #[serde(default)]
        allow_non_nmts: bool,
        #[serde(default)]
        contains: Vec<String>,
    },
    Bisimilar {
        left: String,
        right: String,
        expect: bool,
    },
    Chain {
        steps: Vec<ChainStep>,
    },
}

impl Check {
    pub fn name(&self) -> &'static str {
        match self {
            Check::Refine { .. } => "refine",
            Check::Nmts { .. } => "nmts",
            Check::Lts { .. } => "lts",
            Check::VerifyRelation { .. } => "verify-relation",
            Check::Thorough { .. } => "thorough",
            Check::Implementations { .. } => "implementations",
            Check::Gap { .. } => "gap",
            Check::Bisimilar { .. } => "bisimilar",
            Check::Chain { .. } => "chain",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionOutcome {
    pub id: String,
    pub claim: String,
    pub provenance: Provenance,
    pub check: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

/// A manifest with its models and relations loaded.
pub struct Corpus {
    pub manifest: Manifest,
    models: BTreeMap<String, (String, ModalSystem)>,
    relations: BTreeMap<String, Vec<(String, String)>>,
}

impl Corpus {
    pub fn bundled() -> Result<Corpus, CliError> {
        Corpus::load(bundled_manifest(), |file| {
            bundled_file(file)
                .map(str::to_string)
                .ok_or_else(|| CliError::MissingFile(file.to_string()))
        })
    }

    /// Parses `manifest` and reads every file it names through `read`.
    pub fn load(manifest: &str, mut read: impl FnMut(&str) -> Result<String, CliError>) -> Result<Corpus, CliError> {
        let manifest: Manifest = toml::from_str(manifest).map_err(|e| CliError::Manifest(e.to_string()))?;
        let mut models = BTreeMap::new();
        for entry in &manifest.models {
            let text = read(&entry.file)?;
            let system = parse_system(&text).map_err(|error| CliError::Parse {
                source_name: entry.file.clone(),
                error,
            })?;
            if models.insert(entry.id.clone(), (text, system)).is_some() {
                return Err(CliError::Manifest(format!("model `{}` is declared twice", entry.id)));
            }
        }
        let mut relations = BTreeMap::new();
        for entry in &manifest.relations {
            let text = read(&entry.file)?;
            let pairs = parse_relation(&text).map_err(|error| CliError::Parse {
                source_name: entry.file.clone(),
                error,
            })?;
            relations.insert(entry.id.clone(), pairs);
        }
        Ok(Corpus {
            manifest,
            models,
            relations,
        })
    }

    pub fn model(&self, id: &str) -> Result<&ModalSystem, CliError> {
        self.models
            .get(id)
            .map(|(_, system)| system)
            .ok_or_else(|| CliError::Manifest(format!("unknown model `{id}`")))
    }

    pub fn model_text(&self, id: &str) -> Option<&str> {
        self.models.get(id).map(|(text, _)| text.as_str())
    }

    fn lts(&self, id: &str) -> Result<Lts, CliError> {
        Lts::try_from(self.model(id)?.clone()).map_err(|_| CliError::NotLts(id.to_string()))
    }

    fn relation(&self, id: &str) -> Result<&[(String, String)], CliError> {
        self.relations
            .get(id)
            .map(Vec::as_slice)
            .ok_or_else(|| CliError::Manifest(format!("unknown relation `{id}`")))
    }

    pub fn run(&self) -> Result<Vec<AssertionOutcome>, CliError> {
        self.manifest.assertions.iter().map(|a| self.evaluate(a)).collect()
    }

    pub fn evaluate(&self, assertion: &Assertion) -> Result<AssertionOutcome, CliError> {
        let (expected, actual) = self.compare(&assertion.check)?;
        Ok(AssertionOutcome {
            id: assertion.id.clone(),
            claim: assertion.claim.clone(),
            provenance: assertion.provenance,
            check: assertion.check.name().to_string(),
            passed: expected == actual,
            expected,
            actual,
        })
    }

    /// The expected and the observed outcome, rendered the same way so that
    /// the assertion passes iff they are equal.
    fn compare(&self, check: &Check) -> Result<(String, String), CliError> {
        Ok(match check {
            Check::Refine {
                kind,
                left,
                right,
                allow_non_nmts,
                expect,
                root_cause,
            } => {
                let cert = refines_with_certificate(self.model(left)?, self.model(right)?, *kind, *allow_non_nmts)?;
                let mut expected = verdict(*expect).to_string();
                let mut actual = verdict(cert.holds()).to_string();
                if let Some(want) = root_cause {
                    write!(expected, " at ({}, {}) {}", want.left, want.right, want.clause).unwrap();
                    if let Some(got) = cert.root_cause() {
                        write!(actual, " at ({}, {}) {}", got.left, got.right, got.clause).unwrap();
                    }
                }
                (expected, actual)
            }
            Check::Nmts {
                model,
                expect,
                violation,
            } => {
                let expected = match violation {
                    Some(v) => coherence(&v.state, &v.other, &v.action, &v.witness),
                    None => nmts_word(*expect).to_string(),
                };
                let actual = match is_nmts(self.model(model)?) {
                    Ok(()) => nmts_word(true).to_string(),
                    Err(v) if violation.is_some() => describe_coherence(&v),
                    Err(_) => nmts_word(false).to_string(),
                };
                (expected, actual)
            }
            Check::Lts { model, expect } => (
                lts_word(*expect).to_string(),
                lts_word(self.model(model)?.is_lts()).to_string(),
            ),
            Check::VerifyRelation {
                kind,
                left,
                right,
                relation,
                expect,
            } => {
                let (l, r) = (self.model(left)?, self.model(right)?);
                let relation = StateRelation::from_names(l, r, (*kind).into(), self.relation(relation)?)?;
                let violations = verify_relation(l, r, &relation, *kind)?;
                (verdict(*expect).to_string(), verdict(violations.is_empty()).to_string())
            }
            Check::Thorough {
                kind,
                strategy,
                max_states,
                left,
                right,
                allow_non_nmts,
                expect,
                witness,
            } => {
                let (l, r) = (self.model(left)?, self.model(right)?);
                let config = EnumerationConfig::new(*kind, *strategy, *max_states).allow_non_nmts(*allow_non_nmts);
                let result = thorough_refines_bounded(l, r, config)?;
                let mut expected = thorough_word(*expect, *max_states);
                let mut actual = match &result {
                    ThoroughVerdict::HoldsUpTo { max_states, .. } => thorough_word(true, *max_states),
                    ThoroughVerdict::Counterexample { .. } => thorough_word(false, *max_states),
                };
                if let Some(id) = witness {
                    let w = self.model(id)?;
                    expected.push_str(&format!(", {id} separates"));
                    if refines(w, l, *kind) && !refines(w, r, *kind) {
                        actual.push_str(&format!(", {id} separates"));
                    }
                }
                (expected, actual)
            }
            Check::Implementations {
                kind,
                strategy,
                max_states,
                model,
                allow_non_nmts,
                count,
                contains,
            } => {
                let config = EnumerationConfig::new(*kind, *strategy, *max_states).allow_non_nmts(*allow_non_nmts);
                let set = implementations_upto(self.model(model)?, config)?;
                let mut expected = Vec::new();
                let mut actual = Vec::new();
                if let Some(count) = count {
                    expected.push(format!("{count} members"));
                    actual.push(format!("{} members", set.len()));
                }
                for id in contains {
                    expected.push(format!("contains {id}"));
                    if set.contains_class_of(&self.lts(id)?)? {
                        actual.push(format!("contains {id}"));
                    }
                }
                (expected.join(", "), actual.join(", "))
            }
            Check::Gap {
                strategy,
                max_states,
                model,
                allow_non_nmts,
                contains,
            } => {
                let spec = self.model(model)?;
                let config = EnumerationConfig::new(RefinementKind::Modal, *strategy, *max_states)
                    .allow_non_nmts(*allow_non_nmts);
                let gap = impl_gap(spec, config)?;
                let mut expected = vec!["nonempty".to_string(), "members re-verify".to_string()];
                let mut actual = Vec::new();
                if !gap.is_empty() {
                    actual.push("nonempty".to_string());
                }
                if gap.members().all(|(_, lts)| {
                    refines(lts, spec, RefinementKind::Modal) && !refines(lts, spec, RefinementKind::Nmts)
                }) {
                    actual.push("members re-verify".to_string());
                }
                for id in contains {
                    expected.push(format!("contains {id}"));
                    if gap.contains_class_of(&self.lts(id)?)? {
                        actual.push(format!("contains {id}"));
                    }
                }
                (expected.join(", "), actual.join(", "))
            }
            Check::Bisimilar { left, right, expect } => (
                bisimilar_word(*expect).to_string(),
                bisimilar_word(are_bisimilar(&self.lts(left)?, &self.lts(right)?)).to_string(),
            ),
            Check::Chain { steps } => {
                let mut expected = Vec::new();
                let mut actual = Vec::new();
                for step in steps {
                    let cert = refines_with_certificate(
                        self.model(&step.left)?,
                        self.model(&step.right)?,
                        step.kind,
                        step.allow_non_nmts,
                    )?;
                    let relation = |holds| format!("{} {} {}", step.left, symbol(step.kind, holds), step.right);
                    expected.push(relation(step.expect));
                    actual.push(relation(cert.holds()));
                }
                (expected.join(" ∧ "), actual.join(" ∧ "))
            }
        })
    }
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

fn nmts_word(nmts: bool) -> &'static str {
    if nmts {
        "nmts"
    } else {
        "not nmts"
    }
}

fn lts_word(lts: bool) -> &'static str {
    if lts {
        "lts"
    } else {
        "not lts"
    }
}

fn bisimilar_word(bisimilar: bool) -> &'static str {
    if bisimilar {
        "bisimilar"
    } else {
        "not bisimilar"
    }
}

fn thorough_word(holds: bool, max_states: usize) -> String {
    if holds {
        format!("holds up to {max_states}")
    } else {
        "counterexample".to_string()
    }
}

fn coherence(state: &str, other: &str, action: &str, witness: &[String]) -> String {
    format!("not nmts: ({state}, {other}, {action}) after \"{}\"", witness.join(" "))
}

fn describe_coherence(v: &CoherenceViolation) -> String {
    coherence(&v.state, &v.other, &v.action, &v.witness)
}

pub fn symbol(kind: RefinementKind, holds: bool) -> &'static str {
    match (kind, holds) {
        (RefinementKind::Modal, true) => "≼m",
        (RefinementKind::Modal, false) => "⋠m",
        (RefinementKind::Nmts, true) => "≼n",
        (RefinementKind::Nmts, false) => "⋠n",
    }
}
