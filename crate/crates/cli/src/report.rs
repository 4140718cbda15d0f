//! Machine-readable reports. Every report embeds the text of its inputs, so
//! a saved report can be reloaded and its claims re-checked on their own.

use nmts::format::parse_relation;
use nmts::fuzz::{FuzzReport, NMTS_SOUNDNESS};
use nmts::refine::{check_certificate, ClauseViolation, CoherenceViolation};
use nmts::{
    are_bisimilar, canonical_key, is_nmts, parse_system, refines, verify_relation, Certificate, EnumerationConfig, Lts,
    ModalSystem, RefinementKind, StateRelation,
};
use serde::{Deserialize, Serialize};

use crate::corpus::AssertionOutcome;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Pass,
    Fail,
    /// Listings and conversions, which have no verdict of their own.
    Done,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Holds | Verdict::Pass | Verdict::Done => 0,
            Verdict::Fails | Verdict::Fail => 1,
        }
    }

    pub fn of(holds: bool) -> Verdict {
        if holds {
            Verdict::Holds
        } else {
            Verdict::Fails
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Input {
    /// `model`, `left`, `right`, `relation` or `manifest`.
    pub role: String,
    /// The path or bundled model id given on the command line.
    pub source: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<Input>,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub details: Details,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckDetails {
    pub system: String,
    pub states: usize,
    pub actions: usize,
    pub transitions: usize,
    pub is_lts: bool,
    pub is_deterministic: bool,
    pub is_nmts: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub coherence_violation: Option<CoherenceViolation>,
}

impl CheckDetails {
    pub fn of(system: &ModalSystem) -> Self {
        let coherence = is_nmts(system).err();
        CheckDetails {
            system: system.name().to_string(),
            states: system.state_count(),
            actions: system.alphabet().len(),
            transitions: system.transition_count(),
            is_lts: system.is_lts(),
            is_deterministic: system.is_deterministic(),
            is_nmts: coherence.is_none(),
            coherence_violation: coherence,
        }
    }
}

/// One bisimilarity class of an implementation set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub key: String,
    /// A representative in the model format.
    pub model: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ThoroughOutcome {
    HoldsUpTo {
        max_states: usize,
        candidates: u64,
    },
    Counterexample {
        implementation: String,
        accepted: Certificate,
        rejected: Certificate,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Details {
    Check(CheckDetails),
    Refine {
        certificate: Certificate,
    },
    VerifyRelation {
        kind: RefinementKind,
        relation: Vec<(String, String)>,
        violations: Vec<ClauseViolation>,
    },
    Impls {
        config: EnumerationConfig,
        candidates: u64,
        members: Vec<Member>,
        mixed_classes: Vec<String>,
    },
    Thorough {
        config: EnumerationConfig,
        result: ThoroughOutcome,
    },
    Gap {
        config: EnumerationConfig,
        candidates: u64,
        members: Vec<Member>,
    },
    Bisim {
        bisimilar: bool,
        left_key: String,
        right_key: String,
        /// A bisimulation between the two systems, when there is one.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        relation: Option<Vec<(String, String)>>,
    },
    Dot {
        dot: String,
    },
    Corpus {
        passed: usize,
        failed: usize,
        assertions: Vec<AssertionOutcome>,
    },
    Fuzz {
        report: FuzzReport,
    },
}

pub fn to_json(report: &RunReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports always serialize");
    text.push('\n');
    text
}

pub fn load_report(json: &str) -> Result<RunReport, CliError> {
    serde_json::from_str(json).map_err(|e| CliError::Report(e.to_string()))
}

impl RunReport {
    fn input(&self, role: &str) -> Result<&Input, CliError> {
        self.inputs
            .iter()
            .find(|i| i.role == role)
            .ok_or_else(|| CliError::Report(format!("no `{role}` input")))
    }

    fn system(&self, role: &str) -> Result<ModalSystem, CliError> {
        let input = self.input(role)?;
        parse_system(&input.text).map_err(|error| CliError::Parse {
            source_name: input.source.clone(),
            error,
        })
    }
}

fn parse_lts(text: &str) -> Result<Lts, CliError> {
    let system = parse_system(text).map_err(|error| CliError::Parse {
        source_name: "embedded model".to_string(),
        error,
    })?;
    let name = system.name().to_string();
    Lts::try_from(system).map_err(|_| CliError::NotLts(name))
}

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Report(what()))
    }
}

fn check_members(members: &[Member], mut accept: impl FnMut(&Lts) -> bool) -> Result<(), CliError> {
    for member in members {
        let lts = parse_lts(&member.model)?;
        ensure(canonical_key(&lts)?.as_str() == member.key, || {
            format!("member `{}` does not match its key", lts.name())
        })?;
        ensure(accept(&lts), || format!("member `{}` does not re-verify", lts.name()))?;
    }
    Ok(())
}

/// Re-checks the claims of a reloaded report against its embedded inputs.
/// Certificates are validated rather than recomputed.
pub fn reverify(report: &RunReport) -> Result<(), CliError> {
    ensure(report.exit_code == report.verdict.exit_code(), || {
        "exit code and verdict disagree".to_string()
    })?;
    match &report.details {
        Details::Check(details) => ensure(*details == CheckDetails::of(&report.system("model")?), || {
            "check results differ from the model".to_string()
        }),
        Details::Refine { certificate } => {
            let (left, right) = (report.system("left")?, report.system("right")?);
            ensure(check_certificate(&left, &right, certificate), || {
                "the certificate does not re-verify".to_string()
            })?;
            ensure(report.verdict == Verdict::of(certificate.holds()), || {
                "the verdict contradicts the certificate".to_string()
            })
        }
        Details::VerifyRelation {
            kind,
            relation,
            violations,
        } => {
            let (left, right) = (report.system("left")?, report.system("right")?);
            let embedded = parse_relation(&report.input("relation")?.text).map_err(|error| CliError::Parse {
                source_name: "relation".to_string(),
                error,
            })?;
            ensure(&embedded == relation, || "relation differs from its input".to_string())?;
            let rel = StateRelation::from_names(&left, &right, (*kind).into(), relation)?;
            ensure(&verify_relation(&left, &right, &rel, *kind)? == violations, || {
                "violations differ on recomputation".to_string()
            })?;
            ensure(report.verdict == Verdict::of(violations.is_empty()), || {
                "the verdict contradicts the violations".to_string()
            })
        }
        Details::Impls { config, members, .. } => {
            let spec = report.system("model")?;
            check_members(members, |lts| refines(lts, &spec, config.kind))
        }
        Details::Gap { members, .. } => {
            let spec = report.system("model")?;
            check_members(members, |lts| {
                refines(lts, &spec, RefinementKind::Modal) && !refines(lts, &spec, RefinementKind::Nmts)
            })
        }
        Details::Thorough { result, .. } => {
            let (left, right) = (report.system("left")?, report.system("right")?);
            match result {
                ThoroughOutcome::HoldsUpTo { .. } => ensure(report.verdict == Verdict::Holds, || {
                    "the verdict contradicts the outcome".to_string()
                }),
                ThoroughOutcome::Counterexample {
                    implementation,
                    accepted,
                    rejected,
                } => {
                    let lts = parse_lts(implementation)?;
                    ensure(accepted.holds() && check_certificate(&lts, &left, accepted), || {
                        "the acceptance certificate does not re-verify".to_string()
                    })?;
                    ensure(!rejected.holds() && check_certificate(&lts, &right, rejected), || {
                        "the rejection certificate does not re-verify".to_string()
                    })?;
                    ensure(report.verdict == Verdict::Fails, || {
                        "the verdict contradicts the outcome".to_string()
                    })
                }
            }
        }
        Details::Bisim {
            bisimilar,
            left_key,
            right_key,
            relation,
        } => {
            let left = parse_lts(&report.input("left")?.text)?;
            let right = parse_lts(&report.input("right")?.text)?;
            ensure(*bisimilar == are_bisimilar(&left, &right), || {
                "bisimilarity differs on recomputation".to_string()
            })?;
            ensure(
                canonical_key(&left)?.as_str() == left_key && canonical_key(&right)?.as_str() == right_key,
                || "canonical keys differ on recomputation".to_string(),
            )?;
            if let Some(pairs) = relation {
                // Between LTS, a modal refinement relation is a bisimulation.
                let rel = StateRelation::from_names(&left, &right, RefinementKind::Modal.into(), pairs)?;
                ensure(
                    verify_relation(&left, &right, &rel, RefinementKind::Modal)?.is_empty(),
                    || "the relation is not a bisimulation".to_string(),
                )?;
            }
            Ok(())
        }
        Details::Dot { dot } => ensure(*dot == nmts::dot::to_dot(&report.system("model")?), || {
            "the DOT text differs from the model".to_string()
        }),
        Details::Corpus {
            passed,
            failed,
            assertions,
        } => {
            let ok = assertions.iter().filter(|a| a.passed && a.expected == a.actual).count();
            ensure(*passed == ok && *failed == assertions.len() - ok, || {
                "assertion tallies are inconsistent".to_string()
            })?;
            ensure(
                report.verdict == if *failed == 0 { Verdict::Pass } else { Verdict::Fail },
                || "the verdict contradicts the tallies".to_string(),
            )
        }
        Details::Fuzz { report: fuzz } => {
            for finding in fuzz.findings.iter().filter(|f| f.property == NMTS_SOUNDNESS) {
                let systems = finding
                    .systems
                    .iter()
                    .map(|text| {
                        parse_system(text).map_err(|error| CliError::Parse {
                            source_name: format!("finding at iteration {}", finding.iteration),
                            error,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let [refined, spec, implementation] = systems.as_slice() else {
                    return Err(CliError::Report("a soundness finding needs three systems".to_string()));
                };
                let nmts = RefinementKind::Nmts;
                ensure(
                    refines(refined, spec, nmts)
                        && refines(implementation, refined, nmts)
                        && !refines(implementation, spec, nmts),
                    || format!("the finding at iteration {} does not replay", finding.iteration),
                )?;
            }
            ensure(
                report.verdict == if fuzz.passed() { Verdict::Pass } else { Verdict::Fail },
                || "the verdict contradicts the violations".to_string(),
            )
        }
    }
}
